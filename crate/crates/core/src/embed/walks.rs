use rand::Rng as _;
use rayon::prelude::*;

use super::{EmbedError, EmbeddingConfig, Projection};
use crate::rng::{derive_seed, seeded, Rng};

/// Vose alias table over non-negative weights.
#[derive(Debug, Clone)]
pub(crate) struct Alias {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl Alias {
    /// `None` when the weights are empty or sum to zero.
    pub(crate) fn new(weights: &[f64]) -> Option<Alias> {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        if n == 0 || !(total > 0.0) {
            return None;
        }
        let mut prob: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut alias = vec![0u32; n];
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| prob[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            alias[s] = l as u32;
            prob[l] -= 1.0 - prob[s];
            if prob[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
        }
        Some(Alias { prob, alias })
    }

    pub(crate) fn sample(&self, rng: &mut Rng) -> usize {
        let i = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

/// Walks as sequences of projection indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<u32>>,
    /// Walks that could not leave their start node.
    pub truncated: usize,
}

impl WalkCorpus {
    pub fn tokens(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

pub(crate) fn neighbor_tables(proj: &Projection) -> Vec<Option<Alias>> {
    (0..proj.len())
        .map(|i| Alias::new(&proj.neighbors(i).iter().map(|e| e.1).collect::<Vec<_>>()))
        .collect()
}

/// One second-order walk. The next node `x` after `(prev, cur)` is drawn
/// with probability proportional to `weight(cur, x) * bias`, where bias is
/// `1/p` for `x == prev`, 1 when `x` neighbors `prev`, else `1/q`. Sampling
/// draws `x` by weight and accepts with probability `bias / max_bias`.
pub(crate) fn walk_from(
    proj: &Projection,
    tables: &[Option<Alias>],
    start: usize,
    len: usize,
    p: f64,
    q: f64,
    rng: &mut Rng,
) -> Vec<u32> {
    let mut walk = vec![start as u32];
    let (inv_p, inv_q) = (1.0 / p, 1.0 / q);
    let max_bias = inv_p.max(1.0).max(inv_q);
    while walk.len() < len {
        let cur = *walk.last().expect("non-empty") as usize;
        let Some(table) = &tables[cur] else { break };
        let nbrs = proj.neighbors(cur);
        let next = if walk.len() == 1 {
            nbrs[table.sample(rng)].0
        } else {
            let prev = walk[walk.len() - 2] as usize;
            loop {
                let x = nbrs[table.sample(rng)].0;
                let xi = x as usize;
                let bias = if xi == prev {
                    inv_p
                } else if proj.has_edge(prev, xi) {
                    1.0
                } else {
                    inv_q
                };
                if bias >= max_bias || rng.random::<f64>() * max_bias < bias {
                    break x;
                }
            }
        };
        walk.push(next);
    }
    walk
}

/// `walks_per_node` rounds; each round starts one walk at every node, in
/// node order. Walk `(round, start)` uses its own derived seed, so the
/// corpus is identical regardless of thread count.
pub fn generate_walks(proj: &Projection, cfg: &EmbeddingConfig) -> Result<WalkCorpus, EmbedError> {
    if proj.is_empty() {
        return Err(EmbedError::EmptyProjection);
    }
    cfg.validate()?;
    let tables = neighbor_tables(proj);
    let n = proj.len();
    let walks: Vec<Vec<u32>> = (0..cfg.walks_per_node * n)
        .into_par_iter()
        .map(|k| {
            let (round, start) = (k / n, k % n);
            let mut rng = seeded(derive_seed(cfg.seed, &[0x3a1c, round as u64, start as u64]));
            walk_from(proj, &tables, start, cfg.walk_length, cfg.p, cfg.q, &mut rng)
        })
        .collect();
    let truncated = if cfg.walk_length > 1 {
        walks.iter().filter(|w| w.len() == 1).count()
    } else {
        0
    };
    Ok(WalkCorpus { walks, truncated })
}
