use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mskg_core::embed::Method;
use mskg_core::graph::{NodeLabel, RelationType};
use mskg_core::qa::{self, graph_labels, recommend, tag_manufacturer, AnswerBundle, IntentKind, QaError};
use mskg_core::query::{self, QueryError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as JsonValue};

use crate::{Live, Service};

type Shared = Arc<Service>;

pub fn router(svc: Shared) -> Router {
    Router::new()
        .route("/qa", post(qa_handler))
        .route("/query", post(query_handler))
        .route("/recommend/{id}", get(recommend_handler))
        .route("/labels/{id}", get(labels_handler))
        .route("/manufacturers/{id}", get(manufacturer_handler))
        .route("/graph/stats", get(stats_handler))
        .route("/health", get(health_handler))
        .with_state(svc)
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.code, "message": self.message}))).into_response()
    }
}

impl From<QaError> for ApiError {
    fn from(e: QaError) -> Self {
        let status = match &e {
            QaError::EmptyQuestion | QaError::InvalidK => StatusCode::BAD_REQUEST,
            QaError::Query { stage: "parse", .. } => StatusCode::BAD_REQUEST,
            QaError::UnknownManufacturer(_) | QaError::MissingEmbedding(_) => StatusCode::NOT_FOUND,
            QaError::EmbeddingsUnavailable(_) | QaError::ModelUnavailable | QaError::PortTransport(_) => {
                StatusCode::SERVICE_UNAVAILABLE
            }
            QaError::NoTemplateMatch | QaError::PortOutputInvalid { .. } | QaError::EmptyRanking | QaError::Query { .. } => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            QaError::Classify(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let code = match status {
            StatusCode::BAD_REQUEST => "bad_request",
            StatusCode::NOT_FOUND => "not_found",
            StatusCode::SERVICE_UNAVAILABLE => "unavailable",
            StatusCode::UNPROCESSABLE_ENTITY => "unprocessable",
            _ => "internal",
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

fn live(svc: &Service) -> Result<Arc<Live>, ApiError> {
    svc.current()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no_snapshot", "no snapshot loaded"))
}

/// Runs CPU-bound or port-calling work off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

#[derive(Debug, Deserialize)]
struct QaRequest {
    question: String,
}

#[derive(Debug, Serialize)]
struct QaResponse {
    generation: u64,
    question: String,
    intent: IntentKind,
    summary: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    query: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    columns: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<Vec<Vec<query::Value>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking: Option<Vec<qa::Recommendation>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    probabilities: Option<Vec<f64>>,
    provenance: Vec<String>,
}

impl QaResponse {
    fn from_bundle(generation: u64, b: AnswerBundle) -> Self {
        let (columns, rows) = match b.table {
            Some(t) => (Some(t.columns), Some(t.rows)),
            None => (None, None),
        };
        let (labels, probabilities) = match b.tags {
            Some(t) => (Some(t.names), Some(t.probabilities)),
            None => (None, None),
        };
        QaResponse {
            generation,
            question: b.question,
            intent: b.intent.kind,
            summary: b.summary,
            query: b.query,
            columns,
            rows,
            method: b.method,
            k: b.k,
            ranking: b.ranking,
            labels,
            probabilities,
            provenance: b.provenance,
        }
    }
}

async fn qa_handler(State(svc): State<Shared>, body: Result<Json<QaRequest>, JsonRejection>) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let l = live(&svc)?;
    let bundle = blocking(move || {
        let b = l.snapshot.ctx.answer(&req.question)?;
        Ok(QaResponse::from_bundle(l.generation, b))
    })
    .await?;
    let status = if bundle.intent == IntentKind::Unsupported {
        StatusCode::UNPROCESSABLE_ENTITY
    } else {
        StatusCode::OK
    };
    Ok((status, Json(bundle)).into_response())
}

#[derive(Debug, Deserialize)]
struct QueryRequest {
    msql: String,
}

async fn query_handler(State(svc): State<Shared>, body: Result<Json<QueryRequest>, JsonRejection>) -> Result<Json<JsonValue>, ApiError> {
    let Json(req) = body?;
    let l = live(&svc)?;
    blocking(move || {
        let ast = query::parse(&req.msql).map_err(|e| ApiError::bad_request(e.to_string()))?;
        let table = query::execute(&ast, &l.snapshot.ctx.graph).map_err(|e: QueryError| {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unprocessable", e.to_string())
        })?;
        Ok(Json(json!({
            "generation": l.generation,
            "query": ast.to_string(),
            "columns": table.columns,
            "rows": table.rows,
        })))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct RecommendParams {
    k: Option<usize>,
    method: Option<Method>,
    include_self: Option<bool>,
}

async fn recommend_handler(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    params: Result<Query<RecommendParams>, QueryRejection>,
) -> Result<Json<JsonValue>, ApiError> {
    let Query(p) = params?;
    let l = live(&svc)?;
    blocking(move || {
        let ctx = &l.snapshot.ctx;
        let method = p.method.unwrap_or(ctx.default_method);
        let k = p.k.unwrap_or(ctx.default_k);
        let include_self = p.include_self.unwrap_or(true);
        // unknown ids are a 404 even when embeddings are missing
        let target = mskg_core::graph::canonical_manufacturer_id(&id);
        if ctx.graph.node(&target).is_none_or(|n| n.label != NodeLabel::Manufacturer) {
            return Err(ApiError::not_found(format!("unknown manufacturer `{id}`")));
        }
        let ranking = recommend(&ctx.graph, ctx.embeddings(method)?, &target, k, include_self)?;
        Ok(Json(json!({
            "generation": l.generation,
            "target": target,
            "method": method,
            "k": k,
            "include_self": include_self,
            "ranking": ranking,
        })))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct LabelParams {
    method: Option<Method>,
}

async fn labels_handler(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    params: Result<Query<LabelParams>, QueryRejection>,
) -> Result<Json<JsonValue>, ApiError> {
    let Query(p) = params?;
    let l = live(&svc)?;
    blocking(move || {
        let ctx = &l.snapshot.ctx;
        let graph = graph_labels(&ctx.graph, &id)?;
        let method = p.method.unwrap_or(ctx.default_method);
        let body = match (ctx.model.as_ref(), ctx.embeddings(method)) {
            (Some(model), Ok(table)) => {
                let t = tag_manufacturer(&ctx.graph, table, Some(model), &id)?;
                json!({
                    "generation": l.generation,
                    "id": t.id,
                    "source": "classifier",
                    "method": method,
                    "labels": t.names,
                    "probabilities": t.probabilities,
                    "graph_labels": graph.names(),
                })
            }
            _ => json!({
                "generation": l.generation,
                "id": mskg_core::graph::canonical_manufacturer_id(&id),
                "source": "graph",
                "labels": graph.names(),
                "probabilities": JsonValue::Null,
                "graph_labels": graph.names(),
            }),
        };
        Ok(Json(body))
    })
    .await
}

async fn manufacturer_handler(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Json<JsonValue>, ApiError> {
    let l = live(&svc)?;
    let g = &l.snapshot.ctx.graph;
    let key = mskg_core::graph::canonical_manufacturer_id(&id);
    let node = g
        .node(&key)
        .filter(|n| n.label == NodeLabel::Manufacturer)
        .ok_or_else(|| ApiError::not_found(format!("unknown manufacturer `{id}`")))?;
    let list = |rel| -> Vec<JsonValue> {
        g.neighbors(&node.id, rel)
            .into_iter()
            .map(|(n, w)| json!({"id": n.id, "name": n.name, "weight": w}))
            .collect()
    };
    let labels = graph_labels(g, &node.id)?;
    Ok(Json(json!({
        "generation": l.generation,
        "id": node.id,
        "name": node.name,
        "services": list(RelationType::Provides),
        "certifications": list(RelationType::CertifiedWith),
        "locations": list(RelationType::LocatedIn),
        "labels": labels.names(),
    })))
}

async fn stats_handler(State(svc): State<Shared>) -> Result<Json<JsonValue>, ApiError> {
    let l = live(&svc)?;
    let s = l.snapshot.ctx.graph.stats();
    let labels: BTreeMap<&str, usize> = s.labels.iter().map(|(k, n)| (k.as_str(), *n)).collect();
    let relations: BTreeMap<&str, usize> = s.relations.iter().map(|(k, n)| (k.as_str(), *n)).collect();
    Ok(Json(json!({
        "generation": l.generation,
        "nodes": s.nodes,
        "edges": s.edges,
        "labels": labels,
        "relations": relations,
        "dataset_sha256": l.snapshot.meta.dataset_sha256,
    })))
}

async fn health_handler(State(svc): State<Shared>) -> Response {
    match svc.current() {
        Some(l) => Json(json!({
            "status": "ok",
            "generation": l.generation,
            "snapshot": l.snapshot.meta,
        }))
        .into_response(),
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({"status": "unavailable"}))).into_response(),
    }
}
