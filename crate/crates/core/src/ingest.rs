//! Dataset loading, manifest validation and graph export.
//!
//! The canonical on-disk form is one JSON object per line, discriminated by
//! `"type"`: nodes `{"type":"node","id":..,"labels":[..],"properties":{..}}`
//! and relationships `{"type":"relationship","label":..,"start":{"id":..},
//! "end":{"id":..},"properties":{"weight":..}}`.
//!
//! Record ids are only references between lines; the graph id of a node is
//! always the canonical key of its `name` property. Field spellings seen in
//! graph-database exports are accepted through [`ALIASES`].

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::graph::{Edge, Graph, GraphError, Node, NodeLabel, RelationType};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Schema { line: usize, source: GraphError },
    #[error("manifest mismatch:\n{0}")]
    ManifestMismatch(ManifestReport),
    #[error("unsupported export format `{0}`")]
    UnsupportedFormat(String),
}

/// Accepted spellings, in lookup order, for each logical field.
pub const ALIASES: &[(&str, &[&str])] = &[
    ("type", &["type", "kind", "_type"]),
    ("node.id", &["id", "_id", "identity", "elementId"]),
    ("node.labels", &["labels", "label", "_labels"]),
    ("rel.label", &["label", "rel", "relationship", "relType", "_type"]),
    ("rel.start", &["start", "startNode", "start_id", "source", "src", "from"]),
    ("rel.end", &["end", "endNode", "end_id", "target", "dst", "to"]),
    ("prop.name", &["name", "title", "url"]),
    ("prop.wikidata_id", &["wikidata_id", "wikidataId", "wikidata", "wd_id", "qid"]),
    ("prop.weight", &["weight", "Weight", "score"]),
];

fn aliases(field: &str) -> &'static [&'static str] {
    ALIASES
        .iter()
        .find(|(f, _)| *f == field)
        .map(|(_, a)| *a)
        .unwrap_or(&[])
}

fn lookup<'v>(obj: &'v Map<String, Value>, field: &str) -> Option<&'v Value> {
    aliases(field).iter().find_map(|k| obj.get(*k))
}

/// Property lookup: nested `properties` first, then top-level fields.
fn prop<'v>(obj: &'v Map<String, Value>, field: &str) -> Option<&'v Value> {
    obj.get("properties")
        .and_then(Value::as_object)
        .and_then(|p| lookup(p, field))
        .or_else(|| lookup(obj, field))
}

fn scalar_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub lines: usize,
    pub nodes: usize,
    pub relationships: usize,
    /// Relationships without a weight property (loaded as 1.0).
    pub defaulted_weights: usize,
    /// Node records whose canonical id collided with an earlier record of
    /// the same label and were merged into it.
    pub merged_nodes: usize,
    /// Relationship records repeating an existing (src, dst, rel) triple.
    pub duplicate_relationships: usize,
    /// Hex SHA-256 of the input bytes.
    pub sha256: String,
}

struct PendingRel {
    line: usize,
    rel: RelationType,
    start: String,
    end: String,
    weight: Option<f64>,
}

pub fn load_dataset(path: &Path, manifest: Option<&Manifest>) -> Result<(Graph, LoadReport), IngestError> {
    let bytes = std::fs::read(path)?;
    load_bytes(&bytes, manifest)
}

/// Parses a record stream into a frozen graph.
pub fn load_bytes(bytes: &[u8], manifest: Option<&Manifest>) -> Result<(Graph, LoadReport), IngestError> {
    let mut graph = Graph::new();
    let mut report = LoadReport {
        sha256: sha256_hex(bytes),
        ..LoadReport::default()
    };
    let mut refs: HashMap<String, String> = HashMap::new();
    let mut pending = Vec::new();

    for (i, line) in bytes.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        report.lines = line_no;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let parse_err = |message: String| IngestError::Parse { line: line_no, message };
        let value: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| parse_err("record is not an object".into()))?;
        let kind = lookup(obj, "type")
            .and_then(Value::as_str)
            .ok_or_else(|| parse_err("missing record type".into()))?;
        match kind.to_ascii_lowercase().as_str() {
            "node" => {
                let (record_id, node) = parse_node(obj).map_err(parse_err)?;
                let id = node.id.clone();
                let label = node.label;
                match graph.add_node(node) {
                    Ok(_) => report.nodes += 1,
                    Err(GraphError::DuplicateId(_))
                        if graph.node(&id).map(|n| n.label) == Some(label) =>
                    {
                        report.merged_nodes += 1
                    }
                    Err(source) => return Err(IngestError::Schema { line: line_no, source }),
                }
                if let Some(rid) = record_id {
                    refs.insert(rid, id.clone());
                }
                refs.entry(id.clone()).or_insert(id);
            }
            "relationship" | "relation" | "rel" | "edge" => {
                pending.push(parse_rel(obj, line_no).map_err(parse_err)?);
            }
            other => return Err(parse_err(format!("unknown record type `{other}`"))),
        }
    }

    for p in pending {
        let resolve = |r: &str| {
            refs.get(r).cloned().ok_or_else(|| IngestError::Schema {
                line: p.line,
                source: GraphError::MissingEndpoint(r.to_string()),
            })
        };
        let (src, dst) = (resolve(&p.start)?, resolve(&p.end)?);
        let weight = p.weight.unwrap_or_else(|| {
            report.defaulted_weights += 1;
            1.0
        });
        let before = graph.edge_count();
        graph
            .add_edge(Edge::new(src, dst, p.rel, weight))
            .map_err(|source| IngestError::Schema { line: p.line, source })?;
        if graph.edge_count() == before {
            report.duplicate_relationships += 1;
        }
        report.relationships += 1;
    }

    graph.freeze();
    if let Some(m) = manifest {
        let r = validate_manifest(&graph, m);
        if !r.is_clean() {
            return Err(IngestError::ManifestMismatch(r));
        }
    }
    Ok((graph, report))
}

fn parse_node(obj: &Map<String, Value>) -> Result<(Option<String>, Node), String> {
    let record_id = lookup(obj, "node.id").and_then(scalar_string);
    let labels: Vec<String> = match lookup(obj, "node.labels") {
        Some(Value::Array(a)) => a.iter().filter_map(|v| v.as_str().map(String::from)).collect(),
        Some(Value::String(s)) => vec![s.clone()],
        _ => Vec::new(),
    };
    let known: Vec<NodeLabel> = labels.iter().filter_map(|l| l.parse().ok()).collect();
    let label = match known.as_slice() {
        [one] => *one,
        [] => return Err(format!("no known node label in {labels:?}")),
        _ => return Err(format!("more than one node label in {labels:?}")),
    };
    let name = prop(obj, "prop.name")
        .and_then(scalar_string)
        .or_else(|| record_id.clone())
        .ok_or("node without name or id")?;
    let mut node = Node::new(label, &name);
    let wikidata = prop(obj, "prop.wikidata_id").and_then(scalar_string).or_else(|| {
        // service exports sometimes carry the Wikidata QID in an `id` property
        let p = obj.get("properties")?.as_object()?;
        let v = p.get("id")?.as_str()?;
        let qid = v.len() > 1 && v.starts_with('Q') && v[1..].bytes().all(|b| b.is_ascii_digit());
        qid.then(|| v.to_string())
    });
    if label == NodeLabel::Service {
        node.wikidata_id = wikidata.filter(|w| !w.is_empty());
    }
    Ok((record_id, node))
}

fn parse_rel(obj: &Map<String, Value>, line: usize) -> Result<PendingRel, String> {
    let rel_name = lookup(obj, "rel.label")
        .and_then(Value::as_str)
        .ok_or("relationship without label")?;
    let rel = RelationType::from_str(rel_name)?;
    let endpoint = |field: &str| -> Result<String, String> {
        match lookup(obj, field) {
            Some(Value::Object(o)) => lookup(o, "node.id")
                .or_else(|| o.get("properties").and_then(Value::as_object).and_then(|p| lookup(p, "prop.name")))
                .and_then(scalar_string)
                .ok_or_else(|| format!("{field} reference without id")),
            Some(v) => scalar_string(v).ok_or_else(|| format!("bad {field} reference")),
            None => Err(format!("missing {field} reference")),
        }
    };
    let weight = match prop(obj, "prop.weight") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => Some(s.trim().parse::<f64>().map_err(|e| format!("bad weight: {e}"))?),
        Some(other) => return Err(format!("bad weight {other}")),
    };
    Ok(PendingRel {
        line,
        rel,
        start: endpoint("rel.start")?,
        end: endpoint("rel.end")?,
        weight,
    })
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Expected node counts per label and edge counts per relation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default)]
    pub labels: BTreeMap<NodeLabel, u64>,
    #[serde(default)]
    pub relations: BTreeMap<RelationType, u64>,
}

impl Manifest {
    /// Counts of the published MSKG release.
    pub fn table3() -> Self {
        Manifest {
            labels: BTreeMap::from([
                (NodeLabel::Manufacturer, 13_085),
                (NodeLabel::Service, 77),
                (NodeLabel::Certification, 15),
                (NodeLabel::Location, 63),
            ]),
            relations: BTreeMap::from([
                (RelationType::Provides, 39_761),
                (RelationType::SubclassOf, 76),
                (RelationType::CertifiedWith, 3_968),
                (RelationType::LocatedIn, 14_806),
            ]),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|message| IngestError::Parse { line: 0, message })
    }

    pub fn total_nodes(&self) -> u64 {
        self.labels.values().sum()
    }

    pub fn total_edges(&self) -> u64 {
        self.relations.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub kind: String,
    pub name: String,
    pub expected: u64,
    pub actual: u64,
    pub delta: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestReport {
    pub rows: Vec<ManifestRow>,
}

impl ManifestReport {
    pub fn is_clean(&self) -> bool {
        self.rows.iter().all(|r| r.delta == 0)
    }

    pub fn row(&self, name: &str) -> Option<&ManifestRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

impl std::fmt::Display for ManifestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "kind\tname\texpected\tactual\tdelta")?;
        for r in &self.rows {
            writeln!(f, "{}\t{}\t{}\t{}\t{:+}", r.kind, r.name, r.expected, r.actual, r.delta)?;
        }
        Ok(())
    }
}

/// Per-label and per-relation comparison, including totals. Every label and
/// relation is reported; ones missing from the manifest expect 0.
pub fn validate_manifest(graph: &Graph, manifest: &Manifest) -> ManifestReport {
    let row = |kind: &str, name: &str, expected: u64, actual: usize| ManifestRow {
        kind: kind.into(),
        name: name.into(),
        expected,
        actual: actual as u64,
        delta: actual as i64 - expected as i64,
    };
    let mut rows = Vec::new();
    for l in NodeLabel::ALL {
        let e = manifest.labels.get(&l).copied().unwrap_or(0);
        rows.push(row("label", l.as_str(), e, graph.label_count(l)));
    }
    rows.push(row("total", "entities", manifest.total_nodes(), graph.node_count()));
    for r in RelationType::ALL {
        let e = manifest.relations.get(&r).copied().unwrap_or(0);
        rows.push(row("relation", r.as_str(), e, graph.relation_count(r)));
    }
    rows.push(row("total", "relationships", manifest.total_edges(), graph.edge_count()));
    ManifestReport { rows }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExportFormat {
    CanonicalRecords,
    EdgeTable,
    NodeTable,
}

impl FromStr for ExportFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "canonical-records" | "records" | "jsonl" => Ok(ExportFormat::CanonicalRecords),
            "edge-table" | "edges" => Ok(ExportFormat::EdgeTable),
            "node-table" | "nodes" => Ok(ExportFormat::NodeTable),
            other => Err(IngestError::UnsupportedFormat(other.to_string())),
        }
    }
}

pub const EDGE_TABLE_HEADER: &str = "src\trel\tdst\tweight";
pub const NODE_TABLE_HEADER: &str = "id\tlabel\tname\twikidata_id";

pub fn export_graph(graph: &Graph, format: ExportFormat) -> Vec<u8> {
    let mut out = String::new();
    match format {
        ExportFormat::CanonicalRecords => {
            for n in graph.nodes() {
                let mut props = Map::new();
                props.insert("name".into(), Value::String(n.name.clone()));
                if let Some(w) = &n.wikidata_id {
                    props.insert("wikidata_id".into(), Value::String(w.clone()));
                }
                let rec = json!({"type": "node", "id": n.id, "labels": [n.label.as_str()], "properties": props});
                out.push_str(&rec.to_string());
                out.push('\n');
            }
            for e in graph.edges() {
                let rec = json!({
                    "type": "relationship",
                    "label": e.rel.as_str(),
                    "start": {"id": e.src.id},
                    "end": {"id": e.dst.id},
                    "properties": {"weight": e.weight},
                });
                out.push_str(&rec.to_string());
                out.push('\n');
            }
        }
        ExportFormat::EdgeTable => {
            out.push_str(EDGE_TABLE_HEADER);
            out.push('\n');
            for e in graph.edges() {
                let _ = writeln!(out, "{}\t{}\t{}\t{}", tsv_escape(&e.src.id), e.rel, tsv_escape(&e.dst.id), e.weight);
            }
        }
        ExportFormat::NodeTable => {
            out.push_str(NODE_TABLE_HEADER);
            out.push('\n');
            for n in graph.nodes() {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    tsv_escape(&n.id),
                    n.label,
                    tsv_escape(&n.name),
                    tsv_escape(n.wikidata_id.as_deref().unwrap_or(""))
                );
            }
        }
    }
    out.into_bytes()
}

pub(crate) fn tsv_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn tsv_unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(o) => out.push(o),
            None => out.push('\\'),
        }
    }
    out
}

fn table_rows<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = (usize, Vec<String>)> + 'a, IngestError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == header => {}
        _ => {
            return Err(IngestError::Parse {
                line: 1,
                message: format!("expected header `{header}`"),
            })
        }
    }
    Ok(lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').split('\t').map(tsv_unescape).collect())))
}

/// Rebuilds a frozen graph from a node table and an edge table.
pub fn load_tables(node_table: &str, edge_table: &str) -> Result<Graph, IngestError> {
    let mut g = Graph::new();
    for (line, cols) in table_rows(node_table, NODE_TABLE_HEADER)? {
        let [id, label, name, wd] = <[String; 4]>::try_from(cols).map_err(|c| IngestError::Parse {
            line,
            message: format!("expected 4 columns, found {}", c.len()),
        })?;
        let label: NodeLabel = label.parse().map_err(|message| IngestError::Parse { line, message })?;
        let node = Node {
            id,
            label,
            name,
            wikidata_id: (!wd.is_empty()).then_some(wd),
        };
        g.add_node(node).map_err(|source| IngestError::Schema { line, source })?;
    }
    for (line, cols) in table_rows(edge_table, EDGE_TABLE_HEADER)? {
        let [src, rel, dst, w] = <[String; 4]>::try_from(cols).map_err(|c| IngestError::Parse {
            line,
            message: format!("expected 4 columns, found {}", c.len()),
        })?;
        let rel: RelationType = rel.parse().map_err(|message| IngestError::Parse { line, message })?;
        let weight: f64 = w.parse().map_err(|e| IngestError::Parse {
            line,
            message: format!("bad weight: {e}"),
        })?;
        g.add_edge(Edge::new(src, dst, rel, weight))
            .map_err(|source| IngestError::Schema { line, source })?;
    }
    g.freeze();
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Graph {
        let mut g = Graph::new();
        g.add_node(Node::new(NodeLabel::Manufacturer, "acufab.com")).unwrap();
        g.add_node(Node::new(NodeLabel::Service, "milling").with_wikidata("Q1")).unwrap();
        g.add_edge(Edge::new("acufab.com", "milling", RelationType::Provides, 0.8)).unwrap();
        g.freeze();
        g
    }

    #[test]
    fn empty_input_gives_empty_frozen_graph() {
        let (g, r) = load_bytes(b"", None).unwrap();
        assert!(g.is_frozen());
        assert_eq!(g.node_count(), 0);
        assert_eq!(r.relationships, 0);
    }

    #[test]
    fn dangling_reference_reports_line() {
        let data = concat!(
            r#"{"type":"node","id":"1","labels":["Manufacturer"],"properties":{"name":"a.com"}}"#,
            "\n",
            r#"{"type":"relationship","label":"provides","start":{"id":"1"},"end":{"id":"9"},"properties":{"weight":0.8}}"#,
            "\n"
        );
        match load_bytes(data.as_bytes(), None) {
            Err(IngestError::Schema { line: 2, source: GraphError::MissingEndpoint(id) }) => assert_eq!(id, "9"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_json_reports_line() {
        let data = "\n{\"type\":\"node\"\n";
        assert!(matches!(load_bytes(data.as_bytes(), None), Err(IngestError::Parse { line: 2, .. })));
    }

    #[test]
    fn foreign_spellings_and_default_weight() {
        let data = concat!(
            r#"{"type":"node","id":7,"labels":["Manufacturer"],"properties":{"name":"https://www.Acufab.com"}}"#,
            "\n",
            r#"{"type":"node","id":8,"label":"Service","properties":{"name":"Milling","id":"Q124671"}}"#,
            "\n",
            r#"{"type":"relationship","label":"provides","startNode":7,"endNode":{"id":8}}"#,
            "\n"
        );
        let (g, r) = load_bytes(data.as_bytes(), None).unwrap();
        assert_eq!(r.defaulted_weights, 1);
        let m = g.idx("acufab.com").unwrap();
        let s = g.idx("milling").unwrap();
        assert_eq!(g.edge_weight(m, s, RelationType::Provides), Some(1.0));
        assert_eq!(g.node("milling").unwrap().wikidata_id.as_deref(), Some("Q124671"));
    }

    #[test]
    fn manifest_deltas() {
        let empty = Graph::new();
        let r = validate_manifest(&empty, &Manifest::table3());
        assert_eq!(r.row("Manufacturer").unwrap().delta, -13_085);
        assert_eq!(r.row("relationships").unwrap().delta, -58_611);
        assert_eq!(r.row("entities").unwrap().expected, 13_240);

        let g = tiny();
        let mut m = Manifest::default();
        m.labels.insert(NodeLabel::Manufacturer, 1);
        m.relations.insert(RelationType::Provides, 1);
        let r = validate_manifest(&g, &m);
        assert_eq!(r.row("Service").unwrap().delta, 1);
        assert_eq!(r.row("Manufacturer").unwrap().delta, 0);
        assert_eq!(r.row("provides").unwrap().delta, 0);
    }

    #[test]
    fn manifest_toml_round_trip() {
        let m = Manifest::table3();
        assert_eq!(Manifest::from_toml(&m.to_toml()).unwrap(), m);
    }

    #[test]
    fn empty_tables_are_header_only() {
        let g = Graph::new();
        assert_eq!(export_graph(&g, ExportFormat::EdgeTable), format!("{EDGE_TABLE_HEADER}\n").into_bytes());
        assert_eq!(export_graph(&g, ExportFormat::NodeTable), format!("{NODE_TABLE_HEADER}\n").into_bytes());
    }

    #[test]
    fn one_edge_one_row() {
        let text = String::from_utf8(export_graph(&tiny(), ExportFormat::EdgeTable)).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().nth(1).unwrap(), "acufab.com\tprovides\tmilling\t0.8");
    }

    #[test]
    fn unsupported_format() {
        assert!(matches!("graphml".parse::<ExportFormat>(), Err(IngestError::UnsupportedFormat(_))));
    }

    #[test]
    fn escape_round_trip() {
        let s = "a\tb\\c\nd";
        assert_eq!(tsv_unescape(&tsv_escape(s)), s);
    }
}
