//! Recommender precision against a uniformly shuffled ranking.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{evaluate_recommendation, recommend, services_of, QaError};
use crate::embed::EmbeddingTable;
use crate::graph::{Graph, NodeLabel};
use crate::metrics::{is_relevant_service, precision_at_n, RankedEntry, RecEvalReport};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub targets: usize,
    /// Only manufacturers providing between 1 and this many services are
    /// sampled as targets.
    pub max_services: usize,
    pub ns: Vec<usize>,
    pub shuffles: usize,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            targets: 20,
            max_services: 3,
            ns: vec![1, 5, 10],
            shuffles: 100,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub targets: Vec<String>,
    pub ns: Vec<usize>,
    /// Mean P@N per entry of `ns`; a target whose top entries provide
    /// nothing counts as 0.
    pub recommender: Vec<f64>,
    pub baseline: Vec<f64>,
    pub mrr: f64,
    pub baseline_mrr: f64,
    pub queries: RecEvalReport,
}

impl BenchmarkReport {
    /// Recommender over baseline P@N for `n`; `None` when `n` was not
    /// measured or the baseline is zero.
    pub fn lift(&self, n: usize) -> Option<f64> {
        let i = self.ns.iter().position(|&m| m == n)?;
        (self.baseline[i] > 0.0).then(|| self.recommender[i] / self.baseline[i])
    }
}

fn embedded_manufacturers(graph: &Graph, table: &EmbeddingTable) -> Vec<String> {
    let mut ids: Vec<String> = table
        .ids()
        .iter()
        .filter(|id| graph.node(id).is_some_and(|n| n.label == NodeLabel::Manufacturer))
        .cloned()
        .collect();
    ids.sort();
    ids
}

/// Seeded sample of embedded manufacturers with 1..=`max_services` services.
pub fn sample_targets(graph: &Graph, table: &EmbeddingTable, cfg: &BenchmarkConfig) -> Vec<String> {
    let mut pool: Vec<String> = embedded_manufacturers(graph, table)
        .into_iter()
        .filter(|id| (1..=cfg.max_services).contains(&services_of(graph, id).len()))
        .collect();
    pool.shuffle(&mut stream(cfg.seed, &[0x7a29]));
    pool.truncate(cfg.targets);
    pool
}

pub fn run_benchmark(graph: &Graph, table: &EmbeddingTable, cfg: &BenchmarkConfig) -> Result<BenchmarkReport, QaError> {
    let targets = sample_targets(graph, table, cfg);
    if targets.is_empty() || cfg.ns.is_empty() || cfg.shuffles == 0 {
        return Err(QaError::EmptyRanking);
    }
    let max_n = *cfg.ns.iter().max().expect("nonempty");
    let pool: Vec<RankedEntry> = embedded_manufacturers(graph, table)
        .into_iter()
        .map(|id| RankedEntry {
            services: services_of(graph, &id),
            id,
        })
        .collect();

    let mut rec_sum = vec![0.0; cfg.ns.len()];
    let mut base_sum = vec![0.0; cfg.ns.len()];
    let mut base_rr = 0.0;
    let mut queries = Vec::new();
    let mut rr = 0.0;
    for (t_i, target) in targets.iter().enumerate() {
        let ranking = recommend(graph, table, target, max_n, false)?;
        let rep = evaluate_recommendation(target, &ranking, graph, &cfg.ns)?;
        for (s, p) in rec_sum.iter_mut().zip(&rep.queries[0].precision) {
            *s += p.value.unwrap_or(0.0);
        }
        rr += rep.mrr;
        queries.extend(rep.queries);

        let wanted: BTreeSet<String> = services_of(graph, target).into_iter().collect();
        let relevant: Vec<bool> = pool
            .iter()
            .map(|e| e.services.iter().any(|sv| is_relevant_service(sv, &wanted, graph)))
            .collect();
        let mut order: Vec<usize> = (0..pool.len()).filter(|&i| pool[i].id != *target).collect();
        for s in 0..cfg.shuffles {
            order.shuffle(&mut stream(cfg.seed, &[0xba5e, t_i as u64, s as u64]));
            let top: Vec<RankedEntry> = order.iter().take(max_n).map(|&i| pool[i].clone()).collect();
            for (acc, &n) in base_sum.iter_mut().zip(&cfg.ns) {
                let p = precision_at_n(&wanted, &top, graph, n).map_err(|_| QaError::EmptyRanking)?;
                *acc += p.value.unwrap_or(0.0) / cfg.shuffles as f64;
            }
            let first = order.iter().position(|&i| relevant[i]);
            base_rr += first.map_or(0.0, |p| 1.0 / (p + 1) as f64) / cfg.shuffles as f64;
        }
    }
    let n = targets.len() as f64;
    Ok(BenchmarkReport {
        ns: cfg.ns.clone(),
        recommender: rec_sum.into_iter().map(|s| s / n).collect(),
        baseline: base_sum.into_iter().map(|s| s / n).collect(),
        mrr: rr / n,
        baseline_mrr: base_rr / n,
        queries: RecEvalReport { queries, mrr: rr / n },
        targets,
    })
}
