use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walks::{neighbor_tables, walk_from, Alias};
use super::{EmbedError, EmbeddingConfig, EmbeddingTable, Method, Projection};
use crate::graph::NodeLabel;
use crate::optim::{Adam, AdamConfig};
use crate::rng::{stream, Rng};

/// Two-layer mean-aggregator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SageConfig {
    /// Width of the trainable per-node input channel.
    pub feature_dim: usize,
    pub hidden: usize,
    /// Neighbor samples for the outer and inner layer.
    pub samples: [usize; 2],
    pub epochs: usize,
    pub batch_size: usize,
    /// Negatives shared by every pair in a batch.
    pub negatives: usize,
    pub walk_length: usize,
    pub window: usize,
    pub learning_rate: f64,
    /// Multiplier applied to the cosine before the sigmoid.
    pub logit_scale: f64,
}

impl Default for SageConfig {
    fn default() -> Self {
        SageConfig {
            feature_dim: 16,
            hidden: 100,
            samples: [10, 5],
            epochs: 3,
            batch_size: 256,
            negatives: 20,
            walk_length: 5,
            window: 2,
            learning_rate: 0.01,
            logit_scale: 5.0,
        }
    }
}

impl SageConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        for (name, v) in [
            ("sage.hidden", self.hidden),
            ("sage.epochs", self.epochs),
            ("sage.batch_size", self.batch_size),
            ("sage.negatives", self.negatives),
            ("sage.walk_length", self.walk_length),
            ("sage.window", self.window),
        ] {
            if v == 0 {
                return Err(EmbedError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate > 0.0 && self.logit_scale > 0.0) {
            return Err(EmbedError::InvalidConfig("sage rates must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SageReport {
    pub epoch_loss: Vec<f64>,
    pub pairs_per_epoch: usize,
    /// False when the projection has no edges and no step was taken.
    pub trained: bool,
}

const STATIC: usize = 3;

#[derive(Debug, Clone)]
struct Model {
    d0: usize,
    hidden: usize,
    out: usize,
    fdim: usize,
    /// `hidden × 2·d0`, row-major.
    w1: Vec<f64>,
    /// `out × 2·hidden`.
    w2: Vec<f64>,
    /// `nodes × fdim` trainable channel.
    feats: Vec<f64>,
    statics: Vec<[f64; STATIC]>,
}

#[derive(Debug, Clone)]
struct Grads {
    w1: Vec<f64>,
    w2: Vec<f64>,
    feats: Vec<(usize, Vec<f64>)>,
}

/// One inner-layer evaluation: a node and its sampled neighbors.
#[derive(Debug, Clone)]
struct Inner {
    node: usize,
    nbrs: Vec<usize>,
}

/// Sampled computation tree for one output node.
#[derive(Debug, Clone)]
struct Tree {
    own: Inner,
    nbrs: Vec<Inner>,
}

struct InnerCache {
    a: Vec<f64>,
    pre: Vec<f64>,
    h: Vec<f64>,
}

fn matvec(w: &[f64], rows: usize, x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    (0..rows)
        .map(|r| w[r * cols..(r + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn matvec_t(w: &[f64], cols: usize, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (r, &g) in y.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        for (o, &wv) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *o += g * wv;
        }
    }
    out
}

fn outer_add(acc: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    for (r, &g) in y.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        for (a, &xv) in acc[r * cols..(r + 1) * cols].iter_mut().zip(x) {
            *a += g * xv;
        }
    }
}

impl Model {
    fn new(proj: &Projection, out: usize, sage: &SageConfig, rng: &mut Rng) -> Self {
        let n = proj.len();
        let d0 = STATIC + sage.feature_dim;
        let max_deg = (0..n).map(|i| proj.degree(i)).max().unwrap_or(0).max(1) as f64;
        let statics = (0..n)
            .map(|i| {
                let is_m = (proj.label(i) == NodeLabel::Manufacturer) as u8 as f64;
                [proj.degree(i) as f64 / max_deg, is_m, 1.0 - is_m]
            })
            .collect();
        let glorot = |fan_in: usize, fan_out: usize, len: usize, rng: &mut Rng| -> Vec<f64> {
            let lim = (6.0 / (fan_in + fan_out) as f64).sqrt();
            (0..len).map(|_| rng.random_range(-lim..lim)).collect()
        };
        let w1 = glorot(2 * d0, sage.hidden, sage.hidden * 2 * d0, rng);
        let w2 = glorot(2 * sage.hidden, out, out * 2 * sage.hidden, rng);
        let feats = (0..n * sage.feature_dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        Model {
            d0,
            hidden: sage.hidden,
            out,
            fdim: sage.feature_dim,
            w1,
            w2,
            feats,
            statics,
        }
    }

    fn x(&self, u: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.d0);
        v.extend_from_slice(&self.statics[u]);
        v.extend_from_slice(&self.feats[u * self.fdim..(u + 1) * self.fdim]);
        v
    }

    fn mean_of(&self, rows: impl Iterator<Item = (Vec<f64>, f64)>, width: usize) -> Vec<f64> {
        let mut acc = vec![0.0; width];
        let mut total = 0.0;
        for (r, w) in rows {
            for (a, x) in acc.iter_mut().zip(&r) {
                *a += w * x;
            }
            total += w;
        }
        if total > 0.0 {
            for a in &mut acc {
                *a /= total;
            }
        }
        acc
    }

    fn inner_forward(&self, inner: &Inner) -> InnerCache {
        let mut a = self.x(inner.node);
        a.extend(self.mean_of(inner.nbrs.iter().map(|&w| (self.x(w), 1.0)), self.d0));
        let pre = matvec(&self.w1, self.hidden, &a);
        let h = pre.iter().map(|&v| v.max(0.0)).collect();
        InnerCache { a, pre, h }
    }

    /// Returns `(z, pre-norm output, outer input, inner caches)`.
    fn forward(&self, t: &Tree) -> (Vec<f64>, Vec<f64>, Vec<f64>, InnerCache, Vec<InnerCache>) {
        let own = self.inner_forward(&t.own);
        let nbrs: Vec<InnerCache> = t.nbrs.iter().map(|i| self.inner_forward(i)).collect();
        let mut b = own.h.clone();
        b.extend(self.mean_of(nbrs.iter().map(|c| (c.h.clone(), 1.0)), self.hidden));
        let pre2 = matvec(&self.w2, self.out, &b);
        let norm = pre2.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let z = pre2.iter().map(|v| v / norm).collect();
        (z, pre2, b, own, nbrs)
    }

    fn inner_backward(&self, inner: &Inner, cache: &InnerCache, dh: &[f64], g: &mut Grads) {
        let dpre: Vec<f64> = dh
            .iter()
            .zip(&cache.pre)
            .map(|(&d, &p)| if p > 0.0 { d } else { 0.0 })
            .collect();
        outer_add(&mut g.w1, &dpre, &cache.a);
        let da = matvec_t(&self.w1, 2 * self.d0, &dpre);
        if self.fdim == 0 {
            return;
        }
        g.feats.push((inner.node, da[STATIC..self.d0].to_vec()));
        if !inner.nbrs.is_empty() {
            let k = inner.nbrs.len() as f64;
            let share: Vec<f64> = da[self.d0 + STATIC..].iter().map(|v| v / k).collect();
            for &w in &inner.nbrs {
                g.feats.push((w, share.clone()));
            }
        }
    }

    fn backward(&self, t: &Tree, dz: &[f64]) -> Grads {
        let (z, pre2, b, own, nbrs) = self.forward(t);
        let mut g = Grads {
            w1: vec![0.0; self.w1.len()],
            w2: vec![0.0; self.w2.len()],
            feats: Vec::new(),
        };
        let norm = pre2.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let zdz: f64 = z.iter().zip(dz).map(|(a, b)| a * b).sum();
        let dpre2: Vec<f64> = z.iter().zip(dz).map(|(&zi, &di)| (di - zi * zdz) / norm).collect();
        outer_add(&mut g.w2, &dpre2, &b);
        let db = matvec_t(&self.w2, 2 * self.hidden, &dpre2);
        self.inner_backward(&t.own, &own, &db[..self.hidden], &mut g);
        if !t.nbrs.is_empty() {
            let k = t.nbrs.len() as f64;
            let share: Vec<f64> = db[self.hidden..].iter().map(|v| v / k).collect();
            for (inner, cache) in t.nbrs.iter().zip(&nbrs) {
                self.inner_backward(inner, cache, &share, &mut g);
            }
        }
        g
    }

    /// Full-neighborhood, edge-weighted inference for every node.
    fn embed_all(&self, proj: &Projection) -> Vec<f64> {
        let n = proj.len();
        let xs: Vec<Vec<f64>> = (0..n).map(|u| self.x(u)).collect();
        let h1: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|u| {
                let mut a = xs[u].clone();
                a.extend(self.mean_of(proj.neighbors(u).iter().map(|&(w, wt)| (xs[w as usize].clone(), wt)), self.d0));
                matvec(&self.w1, self.hidden, &a).into_iter().map(|v| v.max(0.0)).collect()
            })
            .collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|u| {
                let mut b = h1[u].clone();
                b.extend(self.mean_of(proj.neighbors(u).iter().map(|&(w, wt)| (h1[w as usize].clone(), wt)), self.hidden));
                let pre = matvec(&self.w2, self.out, &b);
                let norm = pre.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                pre.into_iter().map(|v| v / norm).collect()
            })
            .collect();
        rows.concat()
    }
}

fn sample_nbrs(tables: &[Option<Alias>], proj: &Projection, u: usize, k: usize, rng: &mut Rng) -> Vec<usize> {
    match &tables[u] {
        Some(t) => (0..k).map(|_| proj.neighbors(u)[t.sample(rng)].0 as usize).collect(),
        None => Vec::new(),
    }
}

fn build_tree(tables: &[Option<Alias>], proj: &Projection, u: usize, samples: [usize; 2], rng: &mut Rng) -> Tree {
    let inner = |v: usize, rng: &mut Rng| Inner {
        node: v,
        nbrs: sample_nbrs(tables, proj, v, samples[1], rng),
    };
    let own = inner(u, rng);
    let nbrs = sample_nbrs(tables, proj, u, samples[0], rng)
        .into_iter()
        .map(|v| inner(v, rng))
        .collect();
    Tree { own, nbrs }
}

fn log_sigmoid_neg(x: f64) -> f64 {
    // -ln sigmoid(x)
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A batch: unique nodes with their trees, pairs and shared negatives as
/// positions into `nodes`.
struct Batch {
    trees: Vec<Tree>,
    pairs: Vec<(usize, usize)>,
    negatives: Vec<usize>,
}

fn batch_loss_grads(model: &Model, batch: &Batch, scale: f64) -> (f64, Vec<Grads>) {
    let zs: Vec<Vec<f64>> = batch.trees.par_iter().map(|t| model.forward(t).0).collect();
    let dot = |a: usize, b: usize| -> f64 { zs[a].iter().zip(&zs[b]).map(|(x, y)| x * y).sum() };
    let mut dz = vec![vec![0.0; model.out]; zs.len()];
    let mut loss = 0.0;
    let m = batch.pairs.len().max(1) as f64;
    for &(u, v) in &batch.pairs {
        let s = scale * dot(u, v);
        loss += log_sigmoid_neg(s);
        let g = -(1.0 - sigmoid(s)) * scale / m;
        for k in 0..model.out {
            dz[u][k] += g * zs[v][k];
            dz[v][k] += g * zs[u][k];
        }
        for &n in &batch.negatives {
            let s = scale * dot(u, n);
            loss += log_sigmoid_neg(-s);
            let g = sigmoid(s) * scale / m;
            for k in 0..model.out {
                dz[u][k] += g * zs[n][k];
                dz[n][k] += g * zs[u][k];
            }
        }
    }
    let grads = batch
        .trees
        .par_iter()
        .zip(dz.par_iter())
        .map(|(t, d)| model.backward(t, d))
        .collect();
    (loss / m, grads)
}

/// Unsupervised two-layer mean-aggregator training: random-walk
/// co-occurrence pairs are positives, degree^3/4 draws shared across the
/// batch are negatives, logits are scaled cosines. Outputs unit vectors.
pub fn train_graphsage(proj: &Projection, cfg: &EmbeddingConfig) -> Result<(EmbeddingTable, SageReport), EmbedError> {
    if proj.is_empty() {
        return Err(EmbedError::EmptyProjection);
    }
    cfg.validate()?;
    let sage = &cfg.sage;
    let mut rng = stream(cfg.seed, &[0x5a6e, 0]);
    let mut model = Model::new(proj, cfg.dim, sage, &mut rng);
    let tables = neighbor_tables(proj);
    let noise = Alias::new(&(0..proj.len()).map(|i| (proj.degree(i) as f64).powf(0.75)).collect::<Vec<_>>());
    let adam_cfg = AdamConfig {
        lr: sage.learning_rate,
        ..AdamConfig::default()
    };
    let mut opt_w1 = Adam::new(adam_cfg, model.w1.len());
    let mut opt_w2 = Adam::new(adam_cfg, model.w2.len());
    let mut opt_f = Adam::new(adam_cfg, model.feats.len());
    let mut epoch_loss = Vec::new();
    let mut pairs_per_epoch = 0;
    if let Some(noise) = &noise {
        for epoch in 0..sage.epochs {
            let mut erng = stream(cfg.seed, &[0x5a6e, 1, epoch as u64]);
            let mut pairs = Vec::new();
            for start in 0..proj.len() {
                let w = walk_from(proj, &tables, start, sage.walk_length, 1.0, 1.0, &mut erng);
                for i in 0..w.len() {
                    for j in (i + 1)..(i + 1 + sage.window).min(w.len()) {
                        if w[i] != w[j] {
                            pairs.push((w[i] as usize, w[j] as usize));
                        }
                    }
                }
            }
            pairs.shuffle(&mut erng);
            pairs_per_epoch = pairs.len();
            let mut sum = 0.0;
            let mut batches = 0;
            for chunk in pairs.chunks(sage.batch_size) {
                let mut nodes: Vec<usize> = Vec::new();
                let mut pos = std::collections::HashMap::new();
                let mut slot = |u: usize, nodes: &mut Vec<usize>| *pos.entry(u).or_insert_with(|| {
                    nodes.push(u);
                    nodes.len() - 1
                });
                let bp: Vec<(usize, usize)> = chunk.iter().map(|&(u, v)| (slot(u, &mut nodes), slot(v, &mut nodes))).collect();
                let negatives: Vec<usize> = (0..sage.negatives).map(|_| slot(noise.sample(&mut erng), &mut nodes)).collect();
                let trees = nodes
                    .iter()
                    .map(|&u| build_tree(&tables, proj, u, sage.samples, &mut erng))
                    .collect();
                let batch = Batch {
                    trees,
                    pairs: bp,
                    negatives,
                };
                let (loss, grads) = batch_loss_grads(&model, &batch, sage.logit_scale);
                let (gw1, gw2, gf) = reduce(&model, grads);
                opt_w1.step(&mut model.w1, &gw1);
                opt_w2.step(&mut model.w2, &gw2);
                if model.fdim > 0 {
                    opt_f.step(&mut model.feats, &gf);
                }
                sum += loss;
                batches += 1;
            }
            epoch_loss.push(sum / batches.max(1) as f64);
        }
    }
    let data = model.embed_all(proj);
    let table = EmbeddingTable::new(Method::GraphSage, cfg.dim, proj.ids().to_vec(), data)?;
    Ok((
        table,
        SageReport {
            trained: noise.is_some(),
            epoch_loss,
            pairs_per_epoch,
        },
    ))
}

fn reduce(model: &Model, grads: Vec<Grads>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut w1 = vec![0.0; model.w1.len()];
    let mut w2 = vec![0.0; model.w2.len()];
    let mut f = vec![0.0; model.feats.len()];
    for g in grads {
        for (a, b) in w1.iter_mut().zip(&g.w1) {
            *a += b;
        }
        for (a, b) in w2.iter_mut().zip(&g.w2) {
            *a += b;
        }
        for (node, d) in g.feats {
            for (k, v) in d.into_iter().enumerate() {
                f[node * model.fdim + k] += v;
            }
        }
    }
    (w1, w2, f)
}
