//! Seeded synthetic graphs with the published label and relation counts.
//!
//! Manufacturers are drawn from a few latent archetypes, each favouring the
//! services of two categories and a handful of certifications, so that
//! embedding neighbourhoods and per-category labels carry real signal. The
//! exact counts per label and relation are hit by construction.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::graph::{Edge, Graph, GraphError, Node, NodeIdx, NodeLabel, RelationType};
use crate::ingest::Manifest;
use crate::rng::{stream, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub manufacturers: usize,
    pub provides: usize,
    pub certified_with: usize,
    pub located_in: usize,
    pub archetypes: usize,
    /// Probability mass a manufacturer puts on its archetype's services.
    pub affinity: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self::from_manifest(&Manifest::table3(), 42)
    }
}

impl SyntheticConfig {
    pub fn from_manifest(m: &Manifest, seed: u64) -> Self {
        let get = |r| m.relations.get(&r).copied().unwrap_or(0) as usize;
        SyntheticConfig {
            manufacturers: m.labels.get(&NodeLabel::Manufacturer).copied().unwrap_or(0) as usize,
            provides: get(RelationType::Provides),
            certified_with: get(RelationType::CertifiedWith),
            located_in: get(RelationType::LocatedIn),
            archetypes: 8,
            affinity: 0.9,
            seed,
        }
    }

    /// Same per-manufacturer densities at a fraction of the size.
    pub fn scaled(&self, fraction: f64) -> Self {
        let s = |v: usize| ((v as f64 * fraction).round() as usize).max(1);
        SyntheticConfig {
            manufacturers: s(self.manufacturers),
            provides: s(self.provides),
            certified_with: s(self.certified_with),
            located_in: s(self.located_in),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticGraph {
    pub graph: Graph,
    /// `(manufacturer id, archetype)` in creation order.
    pub archetypes: Vec<(String, usize)>,
}

/// Splits `total` into `n` parts in `[lo, hi]` with roughly geometric spread.
fn allocate(rng: &mut Rng, n: usize, total: usize, lo: usize, hi: usize) -> Vec<usize> {
    let mean = total as f64 / n.max(1) as f64;
    let mut parts: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>().max(1e-12);
            let extra = (-u.ln() * (mean - lo as f64).max(0.0)).round() as usize;
            (lo + extra).min(hi)
        })
        .collect();
    let mut sum: usize = parts.iter().sum();
    while sum != total {
        let i = rng.random_range(0..n);
        if sum < total && parts[i] < hi {
            parts[i] += 1;
            sum += 1;
        } else if sum > total && parts[i] > lo {
            parts[i] -= 1;
            sum -= 1;
        }
    }
    parts
}

/// Weighted sampling of `k` distinct items (exponential keys).
fn weighted_distinct(rng: &mut Rng, weights: &[f64], k: usize) -> Vec<usize> {
    let mut keys: Vec<(f64, usize)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| {
            let u: f64 = rng.random::<f64>().max(1e-300);
            (-u.ln() / w, i)
        })
        .collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keys.into_iter().take(k).map(|(_, i)| i).collect()
}

fn weight(rng: &mut Rng) -> f64 {
    if rng.random_bool(0.6) {
        0.8
    } else {
        (rng.random_range(0.4..1.0f64) * 1000.0).round() / 1000.0
    }
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticGraph, GraphError> {
    let mut g = crate::vocab::base_graph()?;
    let services: Vec<NodeIdx> = g.indices_with_label(NodeLabel::Service).to_vec();
    let certs: Vec<NodeIdx> = g.indices_with_label(NodeLabel::Certification).to_vec();
    let locs: Vec<NodeIdx> = g.indices_with_label(NodeLabel::Location).to_vec();
    let n = cfg.manufacturers;
    let a = cfg.archetypes.max(1);
    let mut rng = stream(cfg.seed, &[0x5e7]);

    let cats: Vec<BTreeSet<_>> = services.iter().map(|&s| g.rollup_idx(s)).collect();
    let mut all_cats: Vec<_> = crate::graph::Category::ALL.to_vec();
    let mut service_w = Vec::with_capacity(a);
    let mut cert_w = Vec::with_capacity(a);
    let mut loc_w = Vec::with_capacity(a);
    for _ in 0..a {
        all_cats.shuffle(&mut rng);
        let focus = [all_cats[0], all_cats[1]];
        let inside: Vec<bool> = cats.iter().map(|c| focus.iter().any(|f| c.contains(f))).collect();
        let n_in = inside.iter().filter(|&&b| b).count().max(1) as f64;
        let n_out = (inside.len() as f64 - n_in).max(1.0);
        service_w.push(
            inside
                .iter()
                .map(|&b| if b { cfg.affinity / n_in } else { (1.0 - cfg.affinity) / n_out })
                .map(|w| w * rng.random_range(0.5..1.5))
                .collect::<Vec<f64>>(),
        );
        let mut cw: Vec<f64> = (0..certs.len()).map(|_| 0.2).collect();
        for i in rand::seq::index::sample(&mut rng, certs.len(), 3.min(certs.len())) {
            cw[i] = 3.0;
        }
        cert_w.push(cw);
        let mut lw: Vec<f64> = (0..locs.len()).map(|i| 1.0 / (1.0 + i as f64 * 0.05)).collect();
        for i in rand::seq::index::sample(&mut rng, locs.len(), 5.min(locs.len())) {
            lw[i] *= 4.0;
        }
        loc_w.push(lw);
    }

    let n_services = allocate(&mut rng, n, cfg.provides, 1, services.len());
    let n_locs = allocate(&mut rng, n, cfg.located_in, 1, locs.len());
    let n_certs = allocate(&mut rng, n, cfg.certified_with, 0, certs.len());

    let mut archetypes = Vec::with_capacity(n);
    for i in 0..n {
        let id = g.add_node(Node::new(NodeLabel::Manufacturer, &format!("mfg{i:05}.example.com")))?;
        let arch = rng.random_range(0..a);
        archetypes.push((id.clone(), arch));
        let plan = [
            (&services, &service_w[arch], n_services[i], RelationType::Provides),
            (&locs, &loc_w[arch], n_locs[i], RelationType::LocatedIn),
            (&certs, &cert_w[arch], n_certs[i], RelationType::CertifiedWith),
        ];
        for (pool, w, k, rel) in plan {
            for j in weighted_distinct(&mut rng, w, k) {
                let dst = g.node_at(pool[j]).id.clone();
                let wt = weight(&mut rng);
                g.add_edge(Edge::new(id.clone(), dst, rel, wt))?;
            }
        }
    }
    g.freeze();
    Ok(SyntheticGraph { graph: g, archetypes })
}

/// `(manufacturer, location, services, certifications)` for [`sample_graph`].
pub const SAMPLE: &[(&str, &str, &[&str], &[&str])] = &[
    ("m01.com", "Michigan", &["welding", "machining"], &["AWS", "ISO9001"]),
    ("m02.com", "Michigan", &["welding"], &[]),
    ("m03.com", "Michigan", &["welding", "additive manufacturing"], &["ITAR"]),
    ("m04.com", "Michigan", &["additive manufacturing"], &[]),
    ("m05.com", "California", &["additive manufacturing", "casting", "machining"], &["ITAR", "AS9100"]),
    ("m06.com", "California", &["additive manufacturing", "casting", "machining"], &["ITAR"]),
    ("m07.com", "Texas", &["additive manufacturing", "casting"], &[]),
    ("m08.com", "California", &["injection molding", "machining"], &["AS9100", "ITAR", "ISO9001"]),
    ("m09.com", "Texas", &["injection molding"], &["AS9100"]),
    ("m10.com", "North Carolina", &["machining", "welding", "assembly"], &[]),
    ("m11.com", "North Carolina", &["machining", "assembly"], &[]),
    ("m12.com", "North Carolina", &["machining"], &[]),
];

/// Small hand-made graph over the full vocabulary, with every edge weight
/// 1.0. Used by examples and tests where answers are checked by hand.
pub fn sample_graph() -> Graph {
    let mut g = crate::vocab::base_graph().expect("vocabulary builds");
    for (m, loc, services, certs) in SAMPLE {
        let id = g.add_node(Node::new(NodeLabel::Manufacturer, m)).expect("fresh id");
        let loc_id = crate::graph::canonical_id(NodeLabel::Location, loc);
        g.add_edge(Edge::new(id.clone(), loc_id, RelationType::LocatedIn, 1.0)).expect("known location");
        for s in *services {
            let sid = crate::graph::canonical_id(NodeLabel::Service, s);
            g.add_edge(Edge::new(id.clone(), sid, RelationType::Provides, 1.0)).expect("known service");
        }
        for c in *certs {
            let cid = crate::graph::canonical_id(NodeLabel::Certification, c);
            g.add_edge(Edge::new(id.clone(), cid, RelationType::CertifiedWith, 1.0)).expect("known certification");
        }
    }
    g.freeze();
    g
}
