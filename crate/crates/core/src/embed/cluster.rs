use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::EmbedError;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub k: usize,
    pub k_max: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k: 4,
            k_max: 10,
            max_iterations: 300,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub history: Vec<f64>,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd's algorithm from greedy farthest-point seeding: a seeded random
/// first centroid, then repeatedly the point farthest from its nearest
/// centroid (lowest index on ties).
pub fn kmeans(points: &[Vec<f64>], cfg: &ClusterConfig) -> Result<KMeansResult, EmbedError> {
    let n = points.len();
    let k = cfg.k;
    if k == 0 {
        return Err(EmbedError::KZero);
    }
    if k > n {
        return Err(EmbedError::KTooLarge { k, n });
    }
    let mut rng = stream(cfg.seed, &[0xc1, k as u64]);
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| sq(p, &centroids[0])).collect();
    while centroids.len() < k {
        let mut far = 0;
        for i in 1..n {
            if dist[i] > dist[far] {
                far = i;
            }
        }
        centroids.push(points[far].clone());
        for (i, p) in points.iter().enumerate() {
            dist[i] = dist[i].min(sq(p, &centroids[centroids.len() - 1]));
        }
    }
    let mut assignment = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..cfg.max_iterations.max(1) {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
            inertia += d;
        }
        history.push(inertia);
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = points
        .iter()
        .zip(&assignment)
        .map(|(p, &a)| sq(p, &centroids[a]))
        .sum();
    Ok(KMeansResult {
        assignment,
        centroids,
        inertia,
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowReport {
    /// `(k, inertia)` for k = 1..=k_max.
    pub inertia: Vec<(usize, f64)>,
    /// k with the largest relative inertia drop from k − 1.
    pub best_k: usize,
}

pub fn elbow_scan(points: &[Vec<f64>], cfg: &ClusterConfig) -> Result<ElbowReport, EmbedError> {
    let k_max = cfg.k_max.min(points.len());
    if k_max == 0 {
        return Err(EmbedError::KZero);
    }
    let mut inertia = Vec::new();
    for k in 1..=k_max {
        let r = kmeans(points, &ClusterConfig { k, ..cfg.clone() })?;
        inertia.push((k, r.inertia));
    }
    let mut best = (1, f64::NEG_INFINITY);
    for w in inertia.windows(2) {
        let (prev, cur) = (w[0].1, w[1].1);
        let drop = if prev > 0.0 { (prev - cur) / prev } else { 0.0 };
        if drop > best.1 {
            best = (w[1].0, drop);
        }
    }
    Ok(ElbowReport { inertia, best_k: best.0 })
}

fn dense_labels(assignment: &[usize]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    for &a in assignment {
        let next = map.len();
        map.entry(a).or_insert(next);
    }
    (assignment.iter().map(|a| map[a]).collect(), map.len())
}

fn silhouette_at(points: &[Vec<f64>], labels: &[usize], sizes: &[usize], i: usize) -> f64 {
    let own = labels[i];
    if sizes[own] <= 1 {
        return 0.0;
    }
    let mut sums = vec![0.0; sizes.len()];
    for (j, p) in points.iter().enumerate() {
        if j != i {
            sums[labels[j]] += sq(&points[i], p).sqrt();
        }
    }
    let a = sums[own] / (sizes[own] - 1) as f64;
    let b = (0..sizes.len())
        .filter(|&c| c != own && sizes[c] > 0)
        .map(|c| sums[c] / sizes[c] as f64)
        .fold(f64::INFINITY, f64::min);
    let den = a.max(b);
    if den == 0.0 {
        0.0
    } else {
        (b - a) / den
    }
}

fn prepare(points: &[Vec<f64>], assignment: &[usize]) -> Result<(Vec<usize>, Vec<usize>), EmbedError> {
    if points.len() != assignment.len() {
        return Err(EmbedError::LengthMismatch(points.len(), assignment.len()));
    }
    let (labels, k) = dense_labels(assignment);
    if k < 2 {
        return Err(EmbedError::SingleCluster);
    }
    let mut sizes = vec![0; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    Ok((labels, sizes))
}

/// Mean silhouette with Euclidean distance. Singleton clusters score 0, as
/// does any point whose a and b are both 0.
pub fn silhouette(points: &[Vec<f64>], assignment: &[usize]) -> Result<f64, EmbedError> {
    let (labels, sizes) = prepare(points, assignment)?;
    use rayon::prelude::*;
    let total: f64 = (0..points.len())
        .into_par_iter()
        .map(|i| silhouette_at(points, &labels, &sizes, i))
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total / points.len() as f64)
}

/// Silhouette averaged over a seeded sample of `sample_size` points; each
/// sampled point still measures distances to every point.
pub fn silhouette_sampled(points: &[Vec<f64>], assignment: &[usize], sample_size: usize, seed: u64) -> Result<f64, EmbedError> {
    if sample_size >= points.len() {
        return silhouette(points, assignment);
    }
    let (labels, sizes) = prepare(points, assignment)?;
    let mut rng = stream(seed, &[0x5117]);
    let mut idx = sample(&mut rng, points.len(), sample_size).into_vec();
    idx.sort_unstable();
    use rayon::prelude::*;
    let vals: Vec<f64> = idx
        .par_iter()
        .map(|&i| silhouette_at(points, &labels, &sizes, i))
        .collect();
    Ok(vals.iter().sum::<f64>() / vals.len().max(1) as f64)
}
