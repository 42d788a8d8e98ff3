use rand::Rng as _;

use super::walks::Alias;
use super::{EmbedError, EmbeddingConfig, EmbeddingTable, Method, Projection, WalkCorpus};
use crate::rng::stream;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln sigmoid(x)`, stable for large |x|.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Skip-gram parameters: input (node) and output (context) vectors.
#[derive(Debug, Clone)]
pub struct Sgns {
    pub dim: usize,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl Sgns {
    pub fn new(nodes: usize, dim: usize, seed: u64) -> Self {
        let mut rng = stream(seed, &[0x51, 0]);
        let half = 0.5 / dim as f64;
        Sgns {
            dim,
            input: (0..nodes * dim).map(|_| rng.random_range(-half..half)).collect(),
            output: vec![0.0; nodes * dim],
        }
    }

    fn dot(&self, c: usize, t: usize) -> f64 {
        let a = &self.input[c * self.dim..(c + 1) * self.dim];
        let b = &self.output[t * self.dim..(t + 1) * self.dim];
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// Negative-sampling loss of one positive pair and its negatives.
    pub fn pair_loss(&self, center: usize, context: usize, negatives: &[usize]) -> f64 {
        neg_log_sigmoid(self.dot(center, context))
            + negatives
                .iter()
                .map(|&n| neg_log_sigmoid(-self.dot(center, n)))
                .sum::<f64>()
    }

    /// One SGD step on a pair; returns the loss before the step.
    pub fn update(&mut self, center: usize, context: usize, negatives: &[usize], lr: f64) -> f64 {
        let d = self.dim;
        let mut grad_in = vec![0.0; d];
        let mut loss = 0.0;
        let targets = std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
        for (t, label) in targets {
            let x = self.dot(center, t);
            loss += if label > 0.0 { neg_log_sigmoid(x) } else { neg_log_sigmoid(-x) };
            let g = (label - sigmoid(x)) * lr;
            let (vi, vo) = (&self.input[center * d..(center + 1) * d], &mut self.output[t * d..(t + 1) * d]);
            for k in 0..d {
                grad_in[k] += g * vo[k];
                vo[k] += g * vi[k];
            }
        }
        for (k, g) in grad_in.into_iter().enumerate() {
            self.input[center * d + k] += g;
        }
        loss
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipgramReport {
    /// Mean pair loss per epoch.
    pub epoch_loss: Vec<f64>,
    pub pairs_per_epoch: usize,
}

/// Sequential skip-gram with negative sampling over the walk corpus.
/// Positives are all pairs within `window`; negatives come from the
/// unigram distribution raised to 3/4; the learning rate decays linearly.
pub fn train_skipgram(
    proj: &Projection,
    corpus: &WalkCorpus,
    cfg: &EmbeddingConfig,
) -> Result<(EmbeddingTable, SkipgramReport), EmbedError> {
    cfg.validate()?;
    if corpus.walks.iter().all(|w| w.len() < 2) {
        return Err(EmbedError::DegenerateCorpus);
    }
    let n = proj.len();
    let mut counts = vec![0.0f64; n];
    for w in &corpus.walks {
        for &t in w {
            counts[t as usize] += 1.0;
        }
    }
    let noise = Alias::new(&counts.iter().map(|c| c.powf(0.75)).collect::<Vec<_>>()).ok_or(EmbedError::DegenerateCorpus)?;
    let mut model = Sgns::new(n, cfg.dim, cfg.seed);
    let pairs_per_epoch: usize = corpus
        .walks
        .iter()
        .map(|w| {
            (0..w.len())
                .map(|i| i.min(cfg.window) + (w.len() - 1 - i).min(cfg.window))
                .sum::<usize>()
        })
        .sum();
    let total = (pairs_per_epoch * cfg.epochs).max(1) as f64;
    let mut step = 0usize;
    let mut negs = Vec::with_capacity(cfg.negatives);
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = stream(cfg.seed, &[0x52, epoch as u64]);
        let mut sum = 0.0;
        for w in &corpus.walks {
            for i in 0..w.len() {
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window + 1).min(w.len());
                for j in lo..hi {
                    if j == i {
                        continue;
                    }
                    let (c, t) = (w[i] as usize, w[j] as usize);
                    negs.clear();
                    for _ in 0..cfg.negatives {
                        let s = noise.sample(&mut rng);
                        if s != t {
                            negs.push(s);
                        }
                    }
                    let lr = cfg.learning_rate * (1.0 - step as f64 / total).max(1e-4);
                    sum += model.update(c, t, &negs, lr);
                    step += 1;
                }
            }
        }
        epoch_loss.push(sum / pairs_per_epoch.max(1) as f64);
    }
    let table = EmbeddingTable::new(Method::Node2Vec, cfg.dim, proj.ids().to_vec(), model.input)?;
    Ok((
        table,
        SkipgramReport {
            epoch_loss,
            pairs_per_epoch,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_lowers_frozen_batch_loss() {
        let mut m = Sgns::new(6, 8, 1);
        for (i, x) in m.output.iter_mut().enumerate() {
            *x = ((i * 7919) % 13) as f64 / 13.0 - 0.5;
        }
        let before = m.pair_loss(0, 1, &[3, 4]);
        m.update(0, 1, &[3, 4], 0.01);
        assert!(m.pair_loss(0, 1, &[3, 4]) < before);
    }

    #[test]
    fn stable_losses() {
        assert!((neg_log_sigmoid(0.0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(neg_log_sigmoid(-800.0).is_finite());
        assert!(neg_log_sigmoid(800.0) >= 0.0);
    }
}
