use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::EmbedError;
use crate::rng::{stream, Rng};

/// Standard normal draw (Box-Muller).
fn normal(rng: &mut Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    /// KL(P‖Q) after every iteration (unexaggerated P).
    pub kl: Vec<f64>,
}

fn sq_dists(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d[i * n + j] = s;
            d[j * n + i] = s;
        }
    }
    d
}

/// Symmetrized joint affinities; each conditional row's Gaussian bandwidth
/// is found by bisection so its perplexity matches the target.
pub fn tsne_affinities(points: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = points.len();
    let d = sq_dists(points);
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d[i * n + j]).collect();
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        let mut probs = vec![0.0; row.len()];
        for _ in 0..100 {
            let mut sum = 0.0;
            for (k, &dk) in row.iter().enumerate() {
                probs[k] = (-(dk - min) * beta).exp();
                sum += probs[k];
            }
            let mut h = sum.ln();
            for (k, &dk) in row.iter().enumerate() {
                probs[k] /= sum;
                h += beta * (dk - min) * probs[k];
            }
            let diff = h - target;
            if diff.abs() < 1e-10 {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        let mut k = 0;
        for j in 0..n {
            if j != i {
                p[i * n + j] = probs[k];
                k += 1;
            }
        }
    }
    let mut joint = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            joint[i * n + j] = ((p[i * n + j] + p[j * n + i]) / (2.0 * n as f64)).max(1e-300);
        }
        joint[i * n + i] = 0.0;
    }
    joint
}

/// KL(P‖Q) and its gradient with respect to the flattened 2-D coordinates.
pub fn tsne_kl_and_grad(p: &[f64], y: &[[f64; 2]]) -> (f64, Vec<[f64; 2]>) {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    let mut z = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = v;
            num[j * n + i] = v;
            z += 2.0 * v;
        }
    }
    let mut kl = 0.0;
    let mut grad = vec![[0.0; 2]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[i * n + j];
            let qij = (num[i * n + j] / z).max(1e-300);
            if pij > 0.0 {
                kl += pij * (pij / qij).ln();
            }
            let m = 4.0 * (pij - qij) * num[i * n + j];
            grad[i][0] += m * (y[i][0] - y[j][0]);
            grad[i][1] += m * (y[i][1] - y[j][1]);
        }
    }
    (kl, grad)
}

/// Exact t-SNE to two dimensions with early exaggeration, momentum and
/// per-coordinate gains. Over the second half of the run a step that would
/// raise KL is undone and the learning rate halved, so the recorded KL is
/// non-increasing there.
pub fn reduce_tsne(points: &[Vec<f64>], cfg: &TsneConfig) -> Result<TsneResult, EmbedError> {
    let n = points.len();
    if n < 3 {
        return Err(EmbedError::TooFewPoints(n));
    }
    let max = (n as f64 - 1.0) / 3.0;
    if !(cfg.perplexity > 0.0 && cfg.perplexity < max) {
        return Err(EmbedError::PerplexityTooLarge {
            perplexity: cfg.perplexity,
            max,
        });
    }
    let p = tsne_affinities(points, cfg.perplexity);
    let mut rng = stream(cfg.seed, &[0x75e, 0]);
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [1e-4 * normal(&mut rng), 1e-4 * normal(&mut rng)]).collect();
    let mut vel = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut lr = cfg.learning_rate;
    let guard_from = cfg.iterations / 2;
    let mut kl_hist = Vec::with_capacity(cfg.iterations);
    let exag_p: Vec<f64> = p.iter().map(|v| v * cfg.early_exaggeration).collect();
    let (mut cur_kl, _) = tsne_kl_and_grad(&p, &y);
    for it in 0..cfg.iterations {
        let exaggerate = it < cfg.exaggeration_iters;
        let momentum = if it < cfg.exaggeration_iters { 0.5 } else { 0.8 };
        let (_, grad) = tsne_kl_and_grad(if exaggerate { &exag_p } else { &p }, &y);
        let prev = (y.clone(), vel.clone(), gains.clone());
        for i in 0..n {
            for k in 0..2 {
                let g = grad[i][k];
                gains[i][k] = if (g > 0.0) != (vel[i][k] > 0.0) {
                    gains[i][k] + 0.2
                } else {
                    (gains[i][k] * 0.8).max(0.01)
                };
                vel[i][k] = momentum * vel[i][k] - lr * gains[i][k] * g;
                y[i][k] += vel[i][k];
            }
        }
        let mean = [
            y.iter().map(|v| v[0]).sum::<f64>() / n as f64,
            y.iter().map(|v| v[1]).sum::<f64>() / n as f64,
        ];
        for v in &mut y {
            v[0] -= mean[0];
            v[1] -= mean[1];
        }
        let (kl, _) = tsne_kl_and_grad(&p, &y);
        if it >= guard_from && !exaggerate && kl > cur_kl {
            (y, _, gains) = prev;
            vel = vec![[0.0; 2]; n];
            lr *= 0.5;
        } else {
            cur_kl = kl;
        }
        kl_hist.push(cur_kl);
    }
    if y.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
        return Err(EmbedError::InvalidConfig("t-SNE diverged".into()));
    }
    Ok(TsneResult { coords: y, kl: kl_hist })
}
