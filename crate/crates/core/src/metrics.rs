//! Evaluation math: confusion-count rates, ROC/PR curves, precision at N and
//! mean reciprocal rank.
//!
//! Undefined ratios (zero denominators) are `None`, never silently 0.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("scores contain only one class")]
    SingleClass,
    #[error("ranking is empty")]
    EmptyRanking,
    #[error("query set is empty")]
    EmptyQuerySet,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

impl std::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        self.tp += o.tp;
        self.tn += o.tn;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn rates(c: ConfusionCounts) -> Rates {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Rates {
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        recall,
        f1,
    }
}

/// Counts with `score >= threshold` predicted positive.
pub fn confusion_at(scores: &[(f64, bool)], threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for &(s, y) in scores {
        c.record(s >= threshold, y);
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curves {
    /// Distinct scores in descending order; point `i + 1` uses threshold `i`.
    pub thresholds: Vec<f64>,
    /// `(false positive rate, true positive rate)`, starting at (0, 0).
    pub roc: Vec<(f64, f64)>,
    /// `(recall, precision)` per threshold.
    pub pr: Vec<(f64, f64)>,
    pub auc_roc: f64,
    pub auc_pr: f64,
}

/// Threshold sweep over distinct scores. Equal scores move together, so a
/// tie between a positive and a negative contributes a diagonal segment
/// (half credit) to the ROC area. PR area is the step sum
/// `sum (r_k - r_{k-1}) * p_k`.
pub fn roc_pr(scores: &[(f64, bool)]) -> Result<Curves, MetricsError> {
    let pos = scores.iter().filter(|s| s.1).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut sorted: Vec<(f64, bool)> = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut thresholds = Vec::new();
    let mut roc = vec![(0.0, 0.0)];
    let mut pr = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut auc_roc, mut auc_pr) = (0.0, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == t {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let (fpr, tpr) = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        let (px, py) = *roc.last().expect("non-empty");
        auc_roc += (fpr - px) * (tpr + py) / 2.0;
        roc.push((fpr, tpr));
        let precision = tp as f64 / (tp + fp) as f64;
        let prev_recall = pr.last().map_or(0.0, |p: &(f64, f64)| p.0);
        auc_pr += (tpr - prev_recall) * precision;
        pr.push((tpr, precision));
        thresholds.push(t);
    }
    Ok(Curves {
        thresholds,
        roc,
        pr,
        auc_roc,
        auc_pr,
    })
}

/// Decides whether one service is the same as, or a transitive subclass of,
/// another.
pub trait SubclassOracle {
    fn is_same_or_subclass(&self, service: &str, ancestor: &str) -> bool;
}

impl<F: Fn(&str, &str) -> bool> SubclassOracle for F {
    fn is_same_or_subclass(&self, service: &str, ancestor: &str) -> bool {
        self(service, ancestor)
    }
}

impl SubclassOracle for crate::graph::Graph {
    fn is_same_or_subclass(&self, service: &str, ancestor: &str) -> bool {
        match (self.idx(service), self.idx(ancestor)) {
            (Some(s), Some(a)) => crate::graph::Graph::is_same_or_subclass(self, s, a),
            _ => service == ancestor,
        }
    }
}

/// Only exact equality counts.
pub struct NoHierarchy;

impl SubclassOracle for NoHierarchy {
    fn is_same_or_subclass(&self, service: &str, ancestor: &str) -> bool {
        service == ancestor
    }
}

/// One ranked manufacturer and the services it provides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub id: String,
    pub services: Vec<String>,
}

pub fn is_relevant_service(service: &str, targets: &BTreeSet<String>, oracle: &dyn SubclassOracle) -> bool {
    targets.iter().any(|t| oracle.is_same_or_subclass(service, t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionAtN {
    pub n: usize,
    /// Entries actually evaluated (`min(n, ranking length)`).
    pub evaluated: usize,
    /// Set when the ranking was shorter than `n`.
    pub truncated: bool,
    pub n_relevant: usize,
    pub n_total: usize,
    /// `n_relevant / n_total`; `None` when the top entries provide nothing.
    pub value: Option<f64>,
}

/// Counts (manufacturer, service) pairs in the top `n`; a pair is relevant
/// when its service is a target or a transitive subclass of one.
pub fn precision_at_n(
    targets: &BTreeSet<String>,
    ranking: &[RankedEntry],
    oracle: &dyn SubclassOracle,
    n: usize,
) -> Result<PrecisionAtN, MetricsError> {
    if ranking.is_empty() {
        return Err(MetricsError::EmptyRanking);
    }
    let top = &ranking[..n.min(ranking.len())];
    let mut n_relevant = 0;
    let mut n_total = 0;
    for entry in top {
        for s in &entry.services {
            n_total += 1;
            if is_relevant_service(s, targets, oracle) {
                n_relevant += 1;
            }
        }
    }
    Ok(PrecisionAtN {
        n,
        evaluated: top.len(),
        truncated: ranking.len() < n,
        n_relevant,
        n_total,
        value: (n_total > 0).then(|| n_relevant as f64 / n_total as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrrReport {
    /// 1-based rank of the first relevant entry per query.
    pub ranks: Vec<Option<usize>>,
    pub mrr: f64,
}

/// Mean of `1 / rank` of the first relevant entry; queries without any
/// relevant entry contribute 0.
pub fn mean_reciprocal_rank(queries: &[Vec<bool>]) -> Result<MrrReport, MetricsError> {
    if queries.is_empty() {
        return Err(MetricsError::EmptyQuerySet);
    }
    let ranks: Vec<Option<usize>> = queries
        .iter()
        .map(|q| q.iter().position(|&r| r).map(|p| p + 1))
        .collect();
    let sum: f64 = ranks.iter().map(|r| r.map_or(0.0, |k| 1.0 / k as f64)).sum();
    Ok(MrrReport {
        mrr: sum / queries.len() as f64,
        ranks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEval {
    pub target: String,
    pub target_services: Vec<String>,
    pub precision: Vec<PrecisionAtN>,
    pub first_relevant_rank: Option<usize>,
}

/// Recommendation evaluation with every intermediate count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecEvalReport {
    pub queries: Vec<QueryEval>,
    pub mrr: f64,
}

impl RecEvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Multi-label summary: exact-match subset accuracy, per-slot accuracy and
/// micro-averaged rates over all slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLabelMetrics {
    pub samples: usize,
    pub subset_accuracy: f64,
    pub label_accuracy: f64,
    pub counts: ConfusionCounts,
    pub micro: Rates,
}

pub fn multilabel(pred: &[Vec<bool>], gold: &[Vec<bool>]) -> Result<MultiLabelMetrics, MetricsError> {
    if pred.len() != gold.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), gold.len()));
    }
    let mut counts = ConfusionCounts::default();
    let mut exact = 0;
    for (p, g) in pred.iter().zip(gold) {
        if p.len() != g.len() {
            return Err(MetricsError::LengthMismatch(p.len(), g.len()));
        }
        if p == g {
            exact += 1;
        }
        for (&a, &b) in p.iter().zip(g) {
            counts.record(a, b);
        }
    }
    let n = pred.len().max(1) as f64;
    Ok(MultiLabelMetrics {
        samples: pred.len(),
        subset_accuracy: exact as f64 / n,
        label_accuracy: rates(counts).accuracy.unwrap_or(0.0),
        counts,
        micro: rates(counts),
    })
}
