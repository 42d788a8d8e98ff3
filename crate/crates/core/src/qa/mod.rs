//! Question answering: routing, template translation to MSQL, embedding
//! recommendations, capability tagging and evidence-backed answers.

mod benchmark;
mod route;

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{derive_labels, ClassifyError, LabelVector, MlpModel};
use crate::embed::{EmbeddingTable, Method};
use crate::extract::EntityType;
use crate::graph::{canonical_manufacturer_id, Graph, NodeLabel, RelationType};
use crate::http::JsonClient;
use crate::metrics::{mean_reciprocal_rank, precision_at_n, QueryEval, RankedEntry, RecEvalReport};
use crate::query::{self, QueryError, ResultTable, Value};

pub use benchmark::{run_benchmark, sample_targets, BenchmarkConfig, BenchmarkReport};
pub use route::{manufacturer_ids, select_template, Intent, IntentKind, Mention, Router, Slots, Template};

#[derive(Debug, Error)]
pub enum QaError {
    #[error("empty question")]
    EmptyQuestion,
    #[error("unknown manufacturer `{0}`")]
    UnknownManufacturer(String),
    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),
    #[error("no {0} embeddings loaded")]
    EmbeddingsUnavailable(Method),
    #[error("no trained classifier loaded")]
    ModelUnavailable,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("no template matches the question")]
    NoTemplateMatch,
    #[error("language model output does not parse: {error}")]
    PortOutputInvalid { query: String, error: QueryError },
    #[error("language model transport: {0}")]
    PortTransport(String),
    #[error("{stage}: {source}")]
    Query {
        stage: &'static str,
        #[source]
        source: QueryError,
    },
    #[error("tagging: {0}")]
    Classify(#[from] ClassifyError),
    #[error("empty ranking")]
    EmptyRanking,
}

/// Natural-language question to MSQL text.
pub trait LanguageModelPort: Send + Sync {
    fn translate(&self, question: &str, schema: &str, examples: &[Example]) -> Result<String, QaError>;

    fn name(&self) -> &str;
}

/// Few-shot pair sent with every external translation request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub question: String,
    pub query: String,
}

pub const SCHEMA: &str = "Node labels: Manufacturer, Service, Certification, Location. \
Properties: name, id, wikidata_id. \
Relations: (Manufacturer)-[:provides]->(Service), (Manufacturer)-[:certified_with]->(Certification), \
(Manufacturer)-[:located_in]->(Location), (Service)-[:subclass_of]->(Service). \
Syntax: MATCH pattern {, pattern} [WHERE expr] RETURN item {, item} [ORDER BY item [ASC|DESC]] [LIMIT n].";

/// Few-shot examples drawn from the template engine itself.
pub fn examples() -> Vec<Example> {
    let router = Router::default();
    [
        "List 50 manufacturers certified with ITAR.",
        "How many manufacturers provide additive manufacturing in each state?",
        "How many manufacturers located in Michigan, provide welding but not certified with AWS?",
    ]
    .iter()
    .map(|q| Example {
        question: q.to_string(),
        query: translate_template(q, &router.route(q).slots).expect("example translates").0,
    })
    .collect()
}

#[derive(Serialize)]
struct PortRequest<'a> {
    question: &'a str,
    schema: &'a str,
    examples: &'a [Example],
}

#[derive(Deserialize)]
struct PortResponse {
    query: String,
}

/// External model reached over JSON/HTTP.
#[derive(Debug)]
pub struct HttpLanguageModel {
    client: JsonClient,
}

impl HttpLanguageModel {
    pub fn new(url: &str, timeout: Duration, max_retries: u32, max_in_flight: usize) -> Self {
        HttpLanguageModel {
            client: JsonClient::new(url, timeout, max_retries, max_in_flight),
        }
    }
}

impl LanguageModelPort for HttpLanguageModel {
    fn translate(&self, question: &str, schema: &str, examples: &[Example]) -> Result<String, QaError> {
        let resp: PortResponse = self
            .client
            .post(&PortRequest {
                question,
                schema,
                examples,
            })
            .map_err(QaError::PortTransport)?;
        Ok(resp.query)
    }

    fn name(&self) -> &str {
        self.client.url()
    }
}

fn lit(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}

fn rel_for(entity: EntityType) -> (&'static str, &'static str) {
    match entity {
        EntityType::Service => ("provides", "Service"),
        EntityType::Certification => ("certified_with", "Certification"),
        EntityType::Location => ("located_in", "Location"),
    }
}

/// `MATCH` patterns for the positive filters and `NOT EXISTS` terms for
/// the negated ones.
fn filters(slots: &Slots, extra: &[&str]) -> (String, Option<String>) {
    let mut pats = vec!["(m:Manufacturer)".to_string()];
    let mut negs = Vec::new();
    for m in &slots.mentions {
        let (rel, label) = rel_for(m.entity);
        let p = format!("(m)-[:{rel}]->(:{label} {{id: {}}})", lit(&m.id));
        if m.negated {
            negs.push(format!("NOT EXISTS ({p})"));
        } else {
            pats.push(p);
        }
    }
    pats.extend(extra.iter().map(|s| s.to_string()));
    let filter = (!negs.is_empty()).then(|| negs.join(" AND "));
    (pats.join(", "), filter)
}

fn assemble(patterns: &str, filter: Option<String>, returns: &str, order: Option<&str>, limit: Option<usize>) -> String {
    let mut q = format!("MATCH {patterns}");
    if let Some(f) = filter {
        q.push_str(&format!(" WHERE {f}"));
    }
    q.push_str(&format!(" RETURN {returns}"));
    if let Some(o) = order {
        q.push_str(&format!(" ORDER BY {o}"));
    }
    if let Some(l) = limit {
        q.push_str(&format!(" LIMIT {l}"));
    }
    q
}

/// Template translation; the returned text always parses.
pub fn translate_template(question: &str, slots: &Slots) -> Result<(String, Template), QaError> {
    let t = select_template(question, slots).ok_or(QaError::NoTemplateMatch)?;
    let x = slots.manufacturer().map(lit).unwrap_or_default();
    let text = match t {
        Template::Raw => question.trim().to_string(),
        Template::ListManufacturers => {
            let (p, f) = filters(slots, &[]);
            assemble(&p, f, "m.id", None, slots.k)
        }
        Template::CountManufacturers => {
            let (p, f) = filters(slots, &[]);
            assemble(&p, f, "count(m)", None, None)
        }
        Template::CountByLocation => {
            let (p, f) = filters(slots, &["(m)-[:located_in]->(l:Location)"]);
            let limit = route::group_limit(question, slots);
            assemble(&p, f, "l.name, count(m)", Some("count(m) DESC"), limit)
        }
        Template::CountByService => {
            let (p, f) = filters(slots, &["(m)-[:provides]->(s:Service)"]);
            let limit = route::group_limit(question, slots);
            assemble(&p, f, "s.name, count(m)", Some("count(m) DESC"), limit)
        }
        Template::SameServices => assemble(
            &format!("(x:Manufacturer {{id: {x}}})-[:provides]->(s:Service)<-[:provides]-(m:Manufacturer)"),
            Some(format!("m.id <> {x}")),
            "m.id, count(s)",
            Some("count(s) DESC"),
            slots.k,
        ),
        Template::ManufacturerLocations => assemble(
            &format!("(m:Manufacturer {{id: {x}}})-[:located_in]->(l:Location)"),
            None,
            "l.name",
            None,
            None,
        ),
        Template::ManufacturerCertifications => assemble(
            &format!("(m:Manufacturer {{id: {x}}})-[:certified_with]->(c:Certification)"),
            None,
            "c.name",
            None,
            None,
        ),
        Template::ManufacturerHasCertification => {
            let c = slots
                .of(EntityType::Certification, false)
                .next()
                .expect("template requires a certification");
            assemble(
                &format!("(m:Manufacturer {{id: {x}}})-[:certified_with]->(c:Certification {{id: {}}})", lit(&c.id)),
                None,
                "count(c)",
                None,
                None,
            )
        }
        Template::ManufacturerServices => assemble(
            &format!("(m:Manufacturer {{id: {x}}})-[:provides]->(s:Service)"),
            None,
            "s.name",
            None,
            None,
        ),
    };
    if let Err(error) = query::parse(&text) {
        return Err(QaError::PortOutputInvalid { query: text, error });
    }
    Ok((text, t))
}

/// Where a translation came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Translation {
    Template(Template),
    External(String),
}

impl Translation {
    pub fn note(&self) -> String {
        match self {
            Translation::Template(t) => format!("template:{}", t.id()),
            Translation::External(n) => format!("external:{n}"),
        }
    }
}

/// Templates first; an external port only when no template fits. External
/// text that does not parse is rejected; a transport failure falls back
/// to the (already failed) template result.
pub fn translate(
    question: &str,
    slots: &Slots,
    port: Option<&dyn LanguageModelPort>,
) -> Result<(String, Translation), QaError> {
    match translate_template(question, slots) {
        Ok((text, t)) => Ok((text, Translation::Template(t))),
        Err(QaError::NoTemplateMatch) => {
            let Some(port) = port else {
                return Err(QaError::NoTemplateMatch);
            };
            let text = match port.translate(question, SCHEMA, &examples()) {
                Ok(t) => t,
                Err(QaError::PortTransport(_)) => return Err(QaError::NoTemplateMatch),
                Err(e) => return Err(e),
            };
            match query::parse(&text) {
                Ok(_) => Ok((text, Translation::External(port.name().to_string()))),
                Err(error) => Err(QaError::PortOutputInvalid { query: text, error }),
            }
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub id: String,
    pub similarity: f64,
}

fn require_manufacturer(graph: &Graph, id: &str) -> Result<String, QaError> {
    let idx = graph
        .idx(id)
        .filter(|&i| graph.node_at(i).label == NodeLabel::Manufacturer)
        .ok_or_else(|| QaError::UnknownManufacturer(id.to_string()))?;
    Ok(graph.node_at(idx).id.clone())
}

/// Cosine similarity against every embedded manufacturer, descending, ties
/// by id. With `include_self` the target leads at similarity 1.
pub fn recommend(
    graph: &Graph,
    table: &EmbeddingTable,
    id: &str,
    k: usize,
    include_self: bool,
) -> Result<Vec<Recommendation>, QaError> {
    if k == 0 {
        return Err(QaError::InvalidK);
    }
    let id = require_manufacturer(graph, id)?;
    let target = table.get(&id).ok_or_else(|| QaError::MissingEmbedding(id.clone()))?;
    let tn = target.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out: Vec<Recommendation> = table
        .iter()
        .filter(|(other, _)| *other != id)
        .filter(|(other, _)| {
            graph
                .idx(other)
                .is_some_and(|i| graph.node_at(i).label == NodeLabel::Manufacturer)
        })
        .map(|(other, v)| {
            let on = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot: f64 = v.iter().zip(target).map(|(a, b)| a * b).sum();
            let similarity = if tn == 0.0 || on == 0.0 { 0.0 } else { dot / (tn * on) };
            Recommendation {
                id: other.to_string(),
                similarity,
            }
        })
        .collect();
    out.sort_by(|a, b| b.similarity.total_cmp(&a.similarity).then_with(|| a.id.cmp(&b.id)));
    if include_self {
        out.insert(
            0,
            Recommendation {
                id: id.clone(),
                similarity: 1.0,
            },
        );
    }
    out.truncate(k);
    Ok(out)
}

/// Service ids a manufacturer provides.
pub fn services_of(graph: &Graph, id: &str) -> Vec<String> {
    match graph.idx(id) {
        Some(i) => {
            let mut s: Vec<String> = graph
                .out_edges(i, RelationType::Provides)
                .map(|(j, _)| graph.node_at(j).id.clone())
                .collect();
            s.sort();
            s
        }
        None => Vec::new(),
    }
}

/// P@N for each N and reciprocal rank of one target's ranking; the target
/// itself is dropped from the ranking first.
pub fn evaluate_recommendation(
    target: &str,
    ranking: &[Recommendation],
    graph: &Graph,
    ns: &[usize],
) -> Result<RecEvalReport, QaError> {
    let target = require_manufacturer(graph, target)?;
    let targets: BTreeSet<String> = services_of(graph, &target).into_iter().collect();
    let entries: Vec<RankedEntry> = ranking
        .iter()
        .filter(|r| r.id != target)
        .map(|r| RankedEntry {
            id: r.id.clone(),
            services: services_of(graph, &r.id),
        })
        .collect();
    if entries.is_empty() {
        return Err(QaError::EmptyRanking);
    }
    let precision = ns
        .iter()
        .map(|&n| precision_at_n(&targets, &entries, graph, n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| QaError::EmptyRanking)?;
    let relevant: Vec<bool> = entries
        .iter()
        .map(|e| {
            e.services
                .iter()
                .any(|s| crate::metrics::is_relevant_service(s, &targets, graph))
        })
        .collect();
    let mrr = mean_reciprocal_rank(&[relevant]).map_err(|_| QaError::EmptyRanking)?;
    Ok(RecEvalReport {
        queries: vec![QueryEval {
            target: target.clone(),
            target_services: targets.into_iter().collect(),
            precision,
            first_relevant_rank: mrr.ranks[0],
        }],
        mrr: mrr.mrr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagResult {
    pub id: String,
    pub labels: LabelVector,
    pub names: Vec<String>,
    pub probabilities: Vec<f64>,
}

/// Classifier prediction for one manufacturer's embedding.
pub fn tag_manufacturer(
    graph: &Graph,
    table: &EmbeddingTable,
    model: Option<&MlpModel>,
    id: &str,
) -> Result<TagResult, QaError> {
    let id = require_manufacturer(graph, id)?;
    let model = model.ok_or(QaError::ModelUnavailable)?;
    let v = table.get(&id).ok_or_else(|| QaError::MissingEmbedding(id.clone()))?;
    let p = model.predict(v, 0.5)?;
    let mut slots = [false; 10];
    for (s, &b) in slots.iter_mut().zip(&p.labels) {
        *s = b;
    }
    let labels = LabelVector(slots);
    Ok(TagResult {
        id,
        names: labels.names().into_iter().map(String::from).collect(),
        labels,
        probabilities: p.probabilities,
    })
}

/// Everything needed to answer; immutable once built.
pub struct QaContext {
    pub graph: Graph,
    pub node2vec: Option<EmbeddingTable>,
    pub graphsage: Option<EmbeddingTable>,
    pub model: Option<MlpModel>,
    pub port: Option<Box<dyn LanguageModelPort>>,
    pub router: Router,
    pub default_method: Method,
    pub default_k: usize,
}

impl QaContext {
    pub fn new(graph: Graph) -> Self {
        QaContext {
            router: Router::from_graph(&graph),
            graph,
            node2vec: None,
            graphsage: None,
            model: None,
            port: None,
            default_method: Method::Node2Vec,
            default_k: 300,
        }
    }

    pub fn embeddings(&self, method: Method) -> Result<&EmbeddingTable, QaError> {
        match method {
            Method::Node2Vec => self.node2vec.as_ref(),
            Method::GraphSage => self.graphsage.as_ref(),
        }
        .ok_or(QaError::EmbeddingsUnavailable(method))
    }

    pub fn answer(&self, question: &str) -> Result<AnswerBundle, QaError> {
        answer(question, self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerBundle {
    pub question: String,
    pub intent: Intent,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<ResultTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ranking: Option<Vec<Recommendation>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tags: Option<TagResult>,
    pub summary: String,
    pub provenance: Vec<String>,
}

const GUIDANCE: &str = "Sorry, that question is not supported. Try asking for manufacturers by service, \
certification or location (for example \"List 50 manufacturers certified with ITAR\"), counts per state, \
manufacturers similar to a given one, or capability tags for a manufacturer.";

fn cell(v: &Value) -> String {
    v.to_string()
}

fn join_list(items: &[String], max: usize) -> String {
    let shown: Vec<&str> = items.iter().take(max).map(String::as_str).collect();
    let mut s = shown.join(", ");
    if items.len() > max {
        s.push_str(", ...");
    }
    s
}

fn describe_filters(slots: &Slots) -> String {
    let mut parts = Vec::new();
    for m in &slots.mentions {
        let verb = match m.entity {
            EntityType::Service => "providing",
            EntityType::Certification => "certified with",
            EntityType::Location => "located in",
        };
        let not = if m.negated { "not " } else { "" };
        parts.push(format!("{not}{verb} {}", m.label));
    }
    parts.join(", ")
}

/// Deterministic summary; every numeral comes from a table cell or from
/// the row count.
fn summarize(t: Template, slots: &Slots, table: &ResultTable) -> String {
    let n = table.rows.len();
    let first_col: Vec<String> = table.rows.iter().map(|r| cell(&r[0])).collect();
    let pairs: Vec<String> = table
        .rows
        .iter()
        .map(|r| r.iter().map(cell).collect::<Vec<_>>().join(": "))
        .collect();
    let filt = describe_filters(slots);
    let x = slots.manufacturer().unwrap_or("");
    if n == 0 {
        return "No matching results were found.".to_string();
    }
    match t {
        Template::Raw => format!("The query returned {n} rows. {}", join_list(&pairs, 10)),
        Template::ListManufacturers => {
            format!("Found {n} manufacturers {filt}: {}", join_list(&first_col, 20))
        }
        Template::CountManufacturers => {
            format!("There are {} manufacturers {filt}.", cell(&table.rows[0][0]))
        }
        Template::CountByLocation => {
            if n == 1 {
                format!(
                    "{} has the biggest number of manufacturers {filt}, with a total of {} manufacturers.",
                    cell(&table.rows[0][0]),
                    cell(&table.rows[0][1])
                )
            } else {
                format!("Manufacturers {filt} per location ({n} locations): {}", join_list(&pairs, 10))
            }
        }
        Template::CountByService => {
            if n == 1 {
                format!(
                    "For manufacturers {filt}, the service provided the most is {} ({} manufacturers).",
                    cell(&table.rows[0][0]),
                    cell(&table.rows[0][1])
                )
            } else {
                format!("Services provided by manufacturers {filt} ({n} services): {}", join_list(&pairs, 10))
            }
        }
        Template::SameServices => format!(
            "Found {n} manufacturers sharing services with {x}: {}",
            join_list(&first_col, 20)
        ),
        Template::ManufacturerLocations => format!("{x} is located in {}.", first_col.join(", ")),
        Template::ManufacturerCertifications => format!("{x} is certified with {}.", first_col.join(", ")),
        Template::ManufacturerHasCertification => {
            let c = slots
                .of(EntityType::Certification, false)
                .next()
                .map(|m| m.label.as_str())
                .unwrap_or("");
            if table.rows[0][0].as_int().unwrap_or(0) > 0 {
                format!("Yes, {x} is certified with {c}.")
            } else {
                format!("No, {x} is not certified with {c}.")
            }
        }
        Template::ManufacturerServices => format!("{x} provides {}.", first_col.join(", ")),
    }
}

/// Route, then translate and execute, recommend, or tag.
pub fn answer(question: &str, ctx: &QaContext) -> Result<AnswerBundle, QaError> {
    if question.trim().is_empty() {
        return Err(QaError::EmptyQuestion);
    }
    let intent = ctx.router.route(question);
    let mut bundle = AnswerBundle {
        question: question.to_string(),
        intent: intent.clone(),
        query: None,
        table: None,
        method: None,
        k: None,
        ranking: None,
        tags: None,
        summary: String::new(),
        provenance: Vec::new(),
    };
    match intent.kind {
        IntentKind::GraphQuery | IntentKind::Unsupported => {
            let translated = translate(question, &intent.slots, ctx.port.as_deref());
            let (text, how) = match translated {
                Ok(t) => t,
                Err(QaError::NoTemplateMatch) => {
                    bundle.intent.kind = IntentKind::Unsupported;
                    bundle.summary = GUIDANCE.to_string();
                    return Ok(bundle);
                }
                Err(e) => return Err(e),
            };
            let ast = query::parse(&text).map_err(|source| QaError::Query { stage: "parse", source })?;
            let table = query::execute(&ast, &ctx.graph).map_err(|source| QaError::Query { stage: "execute", source })?;
            let template = match &how {
                Translation::Template(t) => *t,
                Translation::External(_) => Template::Raw,
            };
            bundle.intent.kind = IntentKind::GraphQuery;
            bundle.summary = summarize(template, &intent.slots, &table);
            bundle.provenance.push(how.note());
            bundle.query = Some(text);
            bundle.table = Some(table);
        }
        IntentKind::SimilarityRecommendation => {
            let id = intent.slots.manufacturer().expect("intent carries an id");
            let method = intent.slots.method.unwrap_or(ctx.default_method);
            let k = intent.slots.k.unwrap_or(ctx.default_k);
            let ranking = recommend(&ctx.graph, ctx.embeddings(method)?, id, k, true)?;
            let ids: Vec<String> = ranking.iter().map(|r| r.id.clone()).collect();
            bundle.summary = format!(
                "Top {} manufacturers similar to {id} by {method} embeddings: {}",
                ranking.len(),
                join_list(&ids, 10)
            );
            bundle.provenance.push(format!("embedding:{method}"));
            bundle.method = Some(method);
            bundle.k = Some(k);
            bundle.ranking = Some(ranking);
        }
        IntentKind::MultiLabelTagging => {
            let id = intent.slots.manufacturer().expect("intent carries an id");
            let method = intent.slots.method.unwrap_or(ctx.default_method);
            let tags = tag_manufacturer(&ctx.graph, ctx.embeddings(method)?, ctx.model.as_ref(), id)?;
            bundle.summary = if tags.names.is_empty() {
                format!("{}: no category reaches the decision threshold.", tags.id)
            } else {
                format!("{}: {}", tags.id, tags.names.join(", "))
            };
            bundle.provenance.push(format!("classifier:{method}"));
            bundle.method = Some(method);
            bundle.tags = Some(tags);
        }
    }
    Ok(bundle)
}

/// Labels derived from the graph for a manufacturer id in any spelling.
pub fn graph_labels(graph: &Graph, id: &str) -> Result<LabelVector, QaError> {
    derive_labels(graph, &canonical_manufacturer_id(id)).map_err(|e| match e {
        ClassifyError::UnknownManufacturer(m) => QaError::UnknownManufacturer(m),
        other => QaError::Classify(other),
    })
}

/// Standalone integer tokens of a text, ignoring attached words such as
/// `5-axis` or `node2vec`.
pub fn numerals(text: &str) -> Vec<i64> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| matches!(c, ',' | '.' | ';' | ':' | '(' | ')' | '?' | '!')))
        .filter(|t| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()))
        .filter_map(|t| t.parse().ok())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_questions_route() {
        let r = Router::default();
        let cases = [
            ("List 50 manufacturers certified with ITAR.", IntentKind::GraphQuery),
            ("List 30 manufacturers certified with ITAR and ISO9001.", IntentKind::GraphQuery),
            ("How many manufacturers provide additive manufacturing in each state?", IntentKind::GraphQuery),
            (
                "Give me 300 manufacturers similar to 110metalworks.com based on the services they provide.",
                IntentKind::SimilarityRecommendation,
            ),
            (
                "Label \"3d-cam.com\" with the following tags: 1-machining, 2-assembly, 3-joining, 4-inspection, 5-forming, 6-molding, 7-casting, 8-additive manufacturing, 9-heat treatment and 10-other?",
                IntentKind::MultiLabelTagging,
            ),
            ("What's the weather?", IntentKind::Unsupported),
        ];
        for (q, want) in cases {
            assert_eq!(r.route(q).kind, want, "{q}");
        }
        let i = r.route("Give me 300 manufacturers similar to 110metalworks.com based on the services they provide.");
        assert_eq!(i.slots.manufacturer(), Some("110metalworks.com"));
        assert_eq!(i.slots.k, Some(300));
    }

    #[test]
    fn canonical_slot_in_query() {
        let r = Router::default();
        let q = "List 30 manufacturers certified with ITAR and ISO 9001.";
        let (text, t) = translate_template(q, &r.route(q).slots).unwrap();
        assert_eq!(t, Template::ListManufacturers);
        assert!(text.contains("'iso9001'"), "{text}");
        assert!(text.ends_with("LIMIT 30"));
    }

    #[test]
    fn negation_becomes_not_exists() {
        let r = Router::default();
        let q = "How many manufacturers located in Michigan, provide welding but not certified with AWS?";
        let (text, t) = translate_template(q, &r.route(q).slots).unwrap();
        assert_eq!(t, Template::CountManufacturers);
        assert!(text.contains("NOT EXISTS ((m)-[:certified_with]->(:Certification {id: 'aws'}))"), "{text}");
    }

    #[test]
    fn numeral_tokens() {
        assert_eq!(numerals("Top 5 of 5-axis node2vec: 12, (7)."), vec![5, 12, 7]);
    }

    struct Broken;
    impl LanguageModelPort for Broken {
        fn translate(&self, _: &str, _: &str, _: &[Example]) -> Result<String, QaError> {
            Ok("MATCH (m RETURN m".into())
        }
        fn name(&self) -> &str {
            "broken"
        }
    }

    #[test]
    fn invalid_port_output_rejected() {
        let r = Router::default();
        let q = "Tell me a story about gears";
        let err = translate(q, &r.route(q).slots, Some(&Broken)).unwrap_err();
        assert!(matches!(err, QaError::PortOutputInvalid { .. }));
        assert!(matches!(translate(q, &r.route(q).slots, None), Err(QaError::NoTemplateMatch)));
    }
}
