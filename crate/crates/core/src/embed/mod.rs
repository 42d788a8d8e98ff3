//! Node embeddings over the Manufacturer–Service projection.
//!
//! [`generate_walks`] + [`train_skipgram`] give biased-walk skip-gram
//! vectors; [`train_graphsage`] gives two-layer mean-aggregator vectors.
//! [`reduce_tsne`], [`kmeans`] and [`silhouette`] support inspection of the
//! learned space.

mod cluster;
mod graphsage;
mod projection;
mod skipgram;
mod tsne;
mod walks;

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cluster::{elbow_scan, kmeans, silhouette, silhouette_sampled, ClusterConfig, ElbowReport, KMeansResult};
pub use graphsage::{train_graphsage, SageConfig, SageReport};
pub use projection::{build_projection, Projection};
pub use skipgram::{train_skipgram, Sgns, SkipgramReport};
pub use tsne::{reduce_tsne, tsne_kl_and_grad, tsne_affinities, TsneConfig, TsneResult};
pub use walks::{generate_walks, WalkCorpus};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("projection is empty")]
    EmptyProjection,
    #[error("walk corpus has no walk longer than one node")]
    DegenerateCorpus,
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("perplexity {perplexity} must be below {max}")]
    PerplexityTooLarge { perplexity: f64, max: f64 },
    #[error("k = {k} exceeds {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be at least 1")]
    KZero,
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("embedding file line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Node2Vec,
    GraphSage,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Node2Vec => "node2vec",
            Method::GraphSage => "graphsage",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "node2vec" => Ok(Method::Node2Vec),
            "graphsage" => Ok(Method::GraphSage),
            other => Err(format!("unknown embedding method `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dim: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub sage: SageConfig,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 100,
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            walks_per_node: 10,
            window: 10,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 42,
            sage: SageConfig::default(),
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        let positive = [
            ("dim", self.dim),
            ("walk_length", self.walk_length),
            ("walks_per_node", self.walks_per_node),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(EmbedError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("p", self.p), ("q", self.q), ("learning_rate", self.learning_rate)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(EmbedError::InvalidConfig(format!("{name} must be a positive number")));
            }
        }
        self.sage.validate()
    }
}

/// Walks then skip-gram.
pub fn train_node2vec(proj: &Projection, cfg: &EmbeddingConfig) -> Result<(EmbeddingTable, SkipgramReport), EmbedError> {
    let corpus = generate_walks(proj, cfg)?;
    train_skipgram(proj, &corpus, cfg)
}

/// Projects the graph and trains the chosen method.
pub fn embed_graph(graph: &crate::graph::Graph, method: Method, cfg: &EmbeddingConfig) -> Result<EmbeddingTable, EmbedError> {
    let proj = build_projection(graph);
    match method {
        Method::Node2Vec => train_node2vec(&proj, cfg).map(|r| r.0),
        Method::GraphSage => train_graphsage(&proj, cfg).map(|r| r.0),
    }
}

/// Node id → vector, tagged with the method that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub method: Method,
    pub dim: usize,
    ids: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMeta {
    pub method: Method,
    pub dim: usize,
    pub nodes: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

impl EmbeddingTable {
    pub fn new(method: Method, dim: usize, ids: Vec<String>, data: Vec<f64>) -> Result<Self, EmbedError> {
        if data.len() != ids.len() * dim {
            return Err(EmbedError::LengthMismatch(data.len(), ids.len() * dim));
        }
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Ok(EmbeddingTable {
            method,
            dim,
            ids,
            data,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), self.row(i)))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Rows for the given ids in order; ids without a vector are skipped.
    pub fn rows_for<'a, I: IntoIterator<Item = &'a str>>(&self, ids: I) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut names = Vec::new();
        let mut rows = Vec::new();
        for id in ids {
            if let Some(v) = self.get(id) {
                names.push(id.to_string());
                rows.push(v.to_vec());
            }
        }
        (names, rows)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id");
        for d in 0..self.dim {
            out.push_str(&format!("\tdim{d}"));
        }
        out.push('\n');
        for (id, v) in self.iter() {
            out.push_str(id);
            for x in v {
                out.push('\t');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str, method: Method) -> Result<Self, EmbedError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(EmbedError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.first() != Some(&"id") {
            return Err(EmbedError::Parse {
                line: 1,
                message: "header must start with `id`".into(),
            });
        }
        let dim = cols.len() - 1;
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let id = parts.next().unwrap_or_default().to_string();
            let mut n = 0;
            for p in parts {
                let x: f64 = p.parse().map_err(|_| EmbedError::Parse {
                    line: i + 1,
                    message: format!("bad number `{p}`"),
                })?;
                if !x.is_finite() {
                    return Err(EmbedError::Parse {
                        line: i + 1,
                        message: "non-finite value".into(),
                    });
                }
                data.push(x);
                n += 1;
            }
            if n != dim {
                return Err(EmbedError::Parse {
                    line: i + 1,
                    message: format!("expected {dim} values, found {n}"),
                });
            }
            ids.push(id);
        }
        EmbeddingTable::new(method, dim, ids, data)
    }

    fn meta_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".meta.json");
        PathBuf::from(p)
    }

    /// Writes the TSV table and a `<path>.meta.json` sidecar.
    pub fn save(&self, path: &Path, seed: Option<u64>) -> Result<(), EmbedError> {
        std::fs::write(path, self.to_tsv())?;
        let meta = EmbeddingMeta {
            method: self.method,
            dim: self.dim,
            nodes: self.len(),
            seed,
        };
        std::fs::write(
            Self::meta_path(path),
            serde_json::to_string_pretty(&meta).expect("meta serializes"),
        )?;
        Ok(())
    }

    /// Reads a table; the method comes from the sidecar when present, else
    /// `fallback`.
    pub fn load(path: &Path, fallback: Method) -> Result<Self, EmbedError> {
        let text = std::fs::read_to_string(path)?;
        let meta_path = Self::meta_path(path);
        let method = if meta_path.exists() {
            let meta: EmbeddingMeta =
                serde_json::from_str(&std::fs::read_to_string(meta_path)?).map_err(|e| EmbedError::Parse {
                    line: 0,
                    message: format!("sidecar: {e}"),
                })?;
            meta.method
        } else {
            fallback
        };
        Self::from_tsv(&text, method)
    }
}

/// `id\tx\ty` rows with a header.
pub fn coords_to_tsv(ids: &[String], coords: &[[f64; 2]]) -> String {
    let mut out = String::from("id\tx\ty\n");
    for (id, [x, y]) in ids.iter().zip(coords) {
        out.push_str(&format!("{id}\t{x}\t{y}\n"));
    }
    out
}
