use std::path::Path;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use mskg_core::classify::{LabelVector, MlpModel};
use mskg_core::config::ServeConfig;
use mskg_core::embed::{EmbeddingTable, Method};
use mskg_core::ingest::load_dataset;
use mskg_core::qa::{HttpLanguageModel, QaContext};
use serde::Serialize;

use crate::ServeError;

/// Build metadata reported by `/health`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SnapshotMeta {
    /// Where the graph came from.
    pub source: String,
    pub dataset_sha256: Option<String>,
    /// Seconds since the epoch at build time.
    pub built_at: u64,
    pub embeddings: Vec<Method>,
    pub model: bool,
    pub language_model: Option<String>,
}

/// Everything one generation of the service answers from. Never mutated
/// after construction.
pub struct Snapshot {
    pub ctx: QaContext,
    pub meta: SnapshotMeta,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl Snapshot {
    pub fn new(ctx: QaContext, source: impl Into<String>, dataset_sha256: Option<String>) -> Self {
        let mut embeddings = Vec::new();
        if ctx.node2vec.is_some() {
            embeddings.push(Method::Node2Vec);
        }
        if ctx.graphsage.is_some() {
            embeddings.push(Method::GraphSage);
        }
        let meta = SnapshotMeta {
            source: source.into(),
            dataset_sha256,
            built_at: now(),
            embeddings,
            model: ctx.model.is_some(),
            language_model: ctx.port.as_ref().map(|p| p.name().to_string()),
        };
        Snapshot { ctx, meta }
    }

    /// Reads the graph, embeddings, model and port settings named in the
    /// config.
    pub fn load(cfg: &ServeConfig) -> Result<Self, ServeError> {
        let graph_path = cfg
            .graph
            .as_deref()
            .ok_or_else(|| ServeError::ValidationFailed("no graph path configured".into()))?;
        let (graph, report) = load_dataset(graph_path, None).map_err(|e| ServeError::Load(e.to_string()))?;
        let mut ctx = QaContext::new(graph);
        let table = |p: &Path, m: Method| EmbeddingTable::load(p, m).map_err(|e| ServeError::Load(format!("{}: {e}", p.display())));
        if let Some(p) = &cfg.node2vec {
            ctx.node2vec = Some(table(p, Method::Node2Vec)?);
        }
        if let Some(p) = &cfg.graphsage {
            ctx.graphsage = Some(table(p, Method::GraphSage)?);
            if ctx.node2vec.is_none() {
                ctx.default_method = Method::GraphSage;
            }
        }
        if let Some(p) = &cfg.model {
            ctx.model = Some(MlpModel::load(p).map_err(|e| ServeError::Load(format!("{}: {e}", p.display())))?);
        }
        if let Some(url) = &cfg.language_model_url {
            ctx.port = Some(Box::new(HttpLanguageModel::new(
                url,
                Duration::from_millis(cfg.timeout_ms),
                cfg.max_retries,
                cfg.max_in_flight,
            )));
        }
        let snap = Snapshot::new(ctx, graph_path.display().to_string(), Some(report.sha256));
        snap.validate()?;
        Ok(snap)
    }

    /// Structural checks run before a snapshot may go live.
    pub fn validate(&self) -> Result<(), ServeError> {
        let g = &self.ctx.graph;
        if !g.is_frozen() {
            return Err(ServeError::ValidationFailed("graph is not frozen".into()));
        }
        g.validate().map_err(|e| ServeError::ValidationFailed(e.to_string()))?;
        let mut dims = Vec::new();
        for t in [&self.ctx.node2vec, &self.ctx.graphsage].into_iter().flatten() {
            if !t.is_finite() {
                return Err(ServeError::ValidationFailed(format!("{} embeddings contain non-finite values", t.method)));
            }
            if let Some(id) = t.ids().iter().find(|id| g.idx(id).is_none()) {
                return Err(ServeError::ValidationFailed(format!("{} embedding for unknown node `{id}`", t.method)));
            }
            dims.push(t.dim);
        }
        if let Some(m) = &self.ctx.model {
            if !m.is_finite() {
                return Err(ServeError::ValidationFailed("model parameters are not finite".into()));
            }
            if m.output != LabelVector::default().0.len() {
                return Err(ServeError::ValidationFailed(format!("model predicts {} labels", m.output)));
            }
            if !dims.is_empty() && !dims.contains(&m.input) {
                return Err(ServeError::ValidationFailed(format!(
                    "model input width {} matches no embedding table",
                    m.input
                )));
            }
        }
        Ok(())
    }
}
