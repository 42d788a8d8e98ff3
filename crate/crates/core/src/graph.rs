//! Typed, weighted property graph with a fixed four-label / four-relation
//! schema.
//!
//! Nodes are keyed by a canonical string id derived from their label and
//! display name (see [`canonical_id`]). Edges are stored once and indexed by
//! both endpoints, per relation type. After [`Graph::freeze`] every mutation
//! fails with [`GraphError::FrozenGraph`] and the graph can be shared freely.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("duplicate node id `{0}` with conflicting label or name")]
    DuplicateId(String),
    #[error("graph is frozen")]
    FrozenGraph,
    #[error("schema violation: {rel} cannot connect {src} to {dst}")]
    SchemaViolation {
        rel: RelationType,
        src: NodeLabel,
        dst: NodeLabel,
    },
    #[error("edge weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),
    #[error("subclass_of {src} -> {dst} would introduce a cycle")]
    CycleIntroduced { src: String, dst: String },
    #[error("edge endpoint `{0}` does not exist")]
    MissingEndpoint(String),
    #[error("node id `{id}` is not the canonical key of its name `{name}`")]
    NonCanonicalId { id: String, name: String },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{id}` has label {actual}, expected {expected}")]
    WrongLabel {
        id: String,
        expected: NodeLabel,
        actual: NodeLabel,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeLabel {
    Manufacturer,
    Service,
    Certification,
    Location,
}

impl NodeLabel {
    pub const ALL: [NodeLabel; 4] = [
        NodeLabel::Manufacturer,
        NodeLabel::Service,
        NodeLabel::Certification,
        NodeLabel::Location,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeLabel::Manufacturer => "Manufacturer",
            NodeLabel::Service => "Service",
            NodeLabel::Certification => "Certification",
            NodeLabel::Location => "Location",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown node label `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationType {
    #[serde(rename = "provides")]
    Provides,
    #[serde(rename = "certified_with")]
    CertifiedWith,
    #[serde(rename = "located_in")]
    LocatedIn,
    #[serde(rename = "subclass_of")]
    SubclassOf,
}

impl RelationType {
    pub const ALL: [RelationType; 4] = [
        RelationType::Provides,
        RelationType::SubclassOf,
        RelationType::CertifiedWith,
        RelationType::LocatedIn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::Provides => "provides",
            RelationType::CertifiedWith => "certified_with",
            RelationType::LocatedIn => "located_in",
            RelationType::SubclassOf => "subclass_of",
        }
    }

    /// Required `(source label, target label)` for this relation.
    pub fn signature(self) -> (NodeLabel, NodeLabel) {
        match self {
            RelationType::Provides => (NodeLabel::Manufacturer, NodeLabel::Service),
            RelationType::CertifiedWith => (NodeLabel::Manufacturer, NodeLabel::Certification),
            RelationType::LocatedIn => (NodeLabel::Manufacturer, NodeLabel::Location),
            RelationType::SubclassOf => (NodeLabel::Service, NodeLabel::Service),
        }
    }

    fn slot(self) -> usize {
        match self {
            RelationType::Provides => 0,
            RelationType::CertifiedWith => 1,
            RelationType::LocatedIn => 2,
            RelationType::SubclassOf => 3,
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        RelationType::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| format!("unknown relation type `{s}`"))
    }
}

/// The ten capability categories, in their fixed label-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Machining,
    Assembly,
    Joining,
    Inspection,
    Forming,
    Molding,
    Casting,
    AdditiveManufacturing,
    HeatTreatment,
    Other,
}

impl Category {
    pub const ALL: [Category; 10] = [
        Category::Machining,
        Category::Assembly,
        Category::Joining,
        Category::Inspection,
        Category::Forming,
        Category::Molding,
        Category::Casting,
        Category::AdditiveManufacturing,
        Category::HeatTreatment,
        Category::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Machining => "machining",
            Category::Assembly => "assembly",
            Category::Joining => "joining",
            Category::Inspection => "inspection",
            Category::Forming => "forming",
            Category::Molding => "molding",
            Category::Casting => "casting",
            Category::AdditiveManufacturing => "additive manufacturing",
            Category::HeatTreatment => "heat treatment",
            Category::Other => "other",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Category whose root service has this canonical id. `other` has no root.
    pub fn from_root_id(id: &str) -> Option<Category> {
        Category::ALL[..9].iter().copied().find(|c| c.name() == id)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Lowercase, whitespace-collapsed name.
pub fn canonical_name(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lowercased web domain with scheme, `www.`, port and path removed.
pub fn canonical_manufacturer_id(raw: &str) -> String {
    let mut s = raw.trim().to_lowercase();
    for scheme in ["https://", "http://"] {
        if let Some(rest) = s.strip_prefix(scheme) {
            s = rest.to_string();
        }
    }
    if let Some(cut) = s.find(['/', '?', '#']) {
        s.truncate(cut);
    }
    if let Some(cut) = s.find(':') {
        s.truncate(cut);
    }
    let s = s.trim_end_matches('.');
    s.strip_prefix("www.").unwrap_or(s).to_string()
}

pub fn canonical_id(label: NodeLabel, raw: &str) -> String {
    match label {
        NodeLabel::Manufacturer => canonical_manufacturer_id(raw),
        _ => canonical_name(raw),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub label: NodeLabel,
    pub name: String,
    pub wikidata_id: Option<String>,
}

impl Node {
    /// Node whose id is the canonical form of `name` for `label`.
    pub fn new(label: NodeLabel, name: &str) -> Self {
        Node {
            id: canonical_id(label, name),
            label,
            name: name.trim().to_string(),
            wikidata_id: None,
        }
    }

    pub fn with_wikidata(mut self, wikidata_id: impl Into<String>) -> Self {
        self.wikidata_id = Some(wikidata_id.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    pub rel: RelationType,
    pub weight: f64,
}

impl Edge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, rel: RelationType, weight: f64) -> Self {
        Edge {
            src: src.into(),
            dst: dst.into(),
            rel,
            weight,
        }
    }
}

/// Dense handle for a node inside one [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeIdx(pub u32);

impl NodeIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct EdgeRec {
    src: NodeIdx,
    dst: NodeIdx,
    rel: RelationType,
    weight: f64,
}

/// Borrowed view of a stored edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgeRef<'g> {
    pub src: &'g Node,
    pub dst: &'g Node,
    pub rel: RelationType,
    pub weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    index: HashMap<String, NodeIdx>,
    by_label: [Vec<NodeIdx>; 4],
    edges: Vec<EdgeRec>,
    edge_index: HashMap<(NodeIdx, NodeIdx, RelationType), usize>,
    out: Vec<[Vec<usize>; 4]>,
    inc: Vec<[Vec<usize>; 4]>,
    frozen: bool,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Unfrozen copy for building a new graph on top of this one.
    pub fn editable_copy(&self) -> Graph {
        Graph {
            frozen: false,
            ..self.clone()
        }
    }

    /// Inserts a node. Re-adding an identical node is a no-op.
    pub fn add_node(&mut self, node: Node) -> Result<String, GraphError> {
        if self.frozen {
            return Err(GraphError::FrozenGraph);
        }
        if node.id != canonical_id(node.label, &node.name) || node.id.is_empty() {
            return Err(GraphError::NonCanonicalId {
                id: node.id,
                name: node.name,
            });
        }
        if let Some(&idx) = self.index.get(&node.id) {
            let existing = &self.nodes[idx.index()];
            if existing.label != node.label || existing.name != node.name {
                return Err(GraphError::DuplicateId(node.id));
            }
            if existing.wikidata_id != node.wikidata_id {
                if existing.wikidata_id.is_some() && node.wikidata_id.is_some() {
                    return Err(GraphError::DuplicateId(node.id));
                }
                if node.wikidata_id.is_some() {
                    self.nodes[idx.index()].wikidata_id = node.wikidata_id;
                }
            }
            return Ok(node.id);
        }
        if node.wikidata_id.is_some() && node.label != NodeLabel::Service {
            return Err(GraphError::WrongLabel {
                id: node.id,
                expected: NodeLabel::Service,
                actual: node.label,
            });
        }
        let idx = NodeIdx(self.nodes.len() as u32);
        self.index.insert(node.id.clone(), idx);
        self.by_label[node.label.slot()].push(idx);
        let id = node.id.clone();
        self.nodes.push(node);
        self.out.push(Default::default());
        self.inc.push(Default::default());
        Ok(id)
    }

    /// Inserts an edge after schema, weight and acyclicity checks. A repeated
    /// `(src, dst, rel)` keeps the larger weight.
    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        if self.frozen {
            return Err(GraphError::FrozenGraph);
        }
        if !(0.0..=1.0).contains(&edge.weight) {
            return Err(GraphError::WeightOutOfRange(edge.weight));
        }
        let src = self
            .idx(&edge.src)
            .ok_or_else(|| GraphError::MissingEndpoint(edge.src.clone()))?;
        let dst = self
            .idx(&edge.dst)
            .ok_or_else(|| GraphError::MissingEndpoint(edge.dst.clone()))?;
        let (want_src, want_dst) = edge.rel.signature();
        let (got_src, got_dst) = (self.nodes[src.index()].label, self.nodes[dst.index()].label);
        if got_src != want_src || got_dst != want_dst {
            return Err(GraphError::SchemaViolation {
                rel: edge.rel,
                src: got_src,
                dst: got_dst,
            });
        }
        if let Some(&e) = self.edge_index.get(&(src, dst, edge.rel)) {
            let rec = &mut self.edges[e];
            rec.weight = rec.weight.max(edge.weight);
            return Ok(());
        }
        if edge.rel == RelationType::SubclassOf && (src == dst || self.reaches_up(dst, src)) {
            return Err(GraphError::CycleIntroduced {
                src: edge.src,
                dst: edge.dst,
            });
        }
        let e = self.edges.len();
        self.edges.push(EdgeRec {
            src,
            dst,
            rel: edge.rel,
            weight: edge.weight,
        });
        self.edge_index.insert((src, dst, edge.rel), e);
        self.out[src.index()][edge.rel.slot()].push(e);
        self.inc[dst.index()][edge.rel.slot()].push(e);
        Ok(())
    }

    /// True if `target` is reachable from `from` over subclass_of edges.
    fn reaches_up(&self, from: NodeIdx, target: NodeIdx) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if n == target {
                return true;
            }
            if std::mem::replace(&mut seen[n.index()], true) {
                continue;
            }
            for (next, _) in self.out_edges(n, RelationType::SubclassOf) {
                stack.push(next);
            }
        }
        false
    }

    /// Resolves an id, trying it verbatim first and then in canonical form.
    pub fn idx(&self, id: &str) -> Option<NodeIdx> {
        if let Some(&i) = self.index.get(id) {
            return Some(i);
        }
        let name = canonical_name(id);
        if let Some(&i) = self.index.get(&name) {
            return Some(i);
        }
        self.index.get(&canonical_manufacturer_id(id)).copied()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.idx(id).map(|i| &self.nodes[i.index()])
    }

    pub fn node_at(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx.index()]
    }

    /// Looks a node up by user-facing name: canonical id first, then a
    /// spacing-insensitive comparison (so `ISO 9001` finds `ISO9001`).
    pub fn find_by_name(&self, label: NodeLabel, value: &str) -> Option<&Node> {
        if let Some(n) = self.node(&canonical_id(label, value)) {
            if n.label == label {
                return Some(n);
            }
        }
        let key = compact_key(value);
        self.nodes_with_label(label)
            .find(|n| compact_key(&n.id) == key || compact_key(&n.name) == key)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    pub fn node_indices(&self) -> impl Iterator<Item = NodeIdx> {
        (0..self.nodes.len() as u32).map(NodeIdx)
    }

    pub fn nodes_with_label(&self, label: NodeLabel) -> impl Iterator<Item = &Node> {
        self.by_label[label.slot()].iter().map(|i| &self.nodes[i.index()])
    }

    pub fn indices_with_label(&self, label: NodeLabel) -> &[NodeIdx] {
        &self.by_label[label.slot()]
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeRef<'_>> {
        self.edges.iter().map(|e| EdgeRef {
            src: &self.nodes[e.src.index()],
            dst: &self.nodes[e.dst.index()],
            rel: e.rel,
            weight: e.weight,
        })
    }

    /// Outgoing `(target, weight)` pairs for one relation, in insertion order.
    pub fn out_edges(&self, n: NodeIdx, rel: RelationType) -> impl Iterator<Item = (NodeIdx, f64)> + '_ {
        self.out[n.index()][rel.slot()]
            .iter()
            .map(|&e| (self.edges[e].dst, self.edges[e].weight))
    }

    /// Incoming `(source, weight)` pairs for one relation, in insertion order.
    pub fn in_edges(&self, n: NodeIdx, rel: RelationType) -> impl Iterator<Item = (NodeIdx, f64)> + '_ {
        self.inc[n.index()][rel.slot()]
            .iter()
            .map(|&e| (self.edges[e].src, self.edges[e].weight))
    }

    pub fn edge_weight(&self, src: NodeIdx, dst: NodeIdx, rel: RelationType) -> Option<f64> {
        self.edge_index
            .get(&(src, dst, rel))
            .map(|&e| self.edges[e].weight)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label_count(&self, label: NodeLabel) -> usize {
        self.by_label[label.slot()].len()
    }

    pub fn relation_count(&self, rel: RelationType) -> usize {
        self.out.iter().map(|slots| slots[rel.slot()].len()).sum()
    }

    /// `(label, count)` and `(relation, count)` tables.
    pub fn stats(&self) -> GraphStats {
        GraphStats {
            labels: NodeLabel::ALL.iter().map(|&l| (l, self.label_count(l))).collect(),
            relations: RelationType::ALL
                .iter()
                .map(|&r| (r, self.relation_count(r)))
                .collect(),
            nodes: self.node_count(),
            edges: self.edge_count(),
        }
    }

    fn expect_label(&self, id: &str, label: NodeLabel) -> Result<NodeIdx, GraphError> {
        let idx = self.idx(id).ok_or_else(|| GraphError::UnknownNode(id.to_string()))?;
        let actual = self.nodes[idx.index()].label;
        if actual != label {
            return Err(GraphError::WrongLabel {
                id: id.to_string(),
                expected: label,
                actual,
            });
        }
        Ok(idx)
    }

    /// Category roots reachable from a service along subclass_of, or
    /// `{other}` when none is.
    pub fn rollup_to_categories(&self, service_id: &str) -> Result<BTreeSet<Category>, GraphError> {
        let idx = self.expect_label(service_id, NodeLabel::Service)?;
        Ok(self.rollup_idx(idx))
    }

    pub fn rollup_idx(&self, idx: NodeIdx) -> BTreeSet<Category> {
        let mut found = BTreeSet::new();
        for n in self.ancestors_inclusive(idx) {
            if let Some(c) = Category::from_root_id(&self.nodes[n.index()].id) {
                found.insert(c);
            }
        }
        if found.is_empty() {
            found.insert(Category::Other);
        }
        found
    }

    /// The node itself plus everything above it along subclass_of, BFS order.
    pub fn ancestors_inclusive(&self, idx: NodeIdx) -> Vec<NodeIdx> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([idx]);
        seen[idx.index()] = true;
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for (up, _) in self.out_edges(n, RelationType::SubclassOf) {
                if !seen[up.index()] {
                    seen[up.index()] = true;
                    queue.push_back(up);
                }
            }
        }
        order
    }

    /// True if `child` equals `ancestor` or reaches it through subclass_of.
    pub fn is_same_or_subclass(&self, child: NodeIdx, ancestor: NodeIdx) -> bool {
        child == ancestor || self.reaches_up(child, ancestor)
    }

    /// Targets of `rel` edges leaving the node with this id, with weights.
    pub fn neighbors(&self, id: &str, rel: RelationType) -> Vec<(&Node, f64)> {
        match self.idx(id) {
            Some(i) => self
                .out_edges(i, rel)
                .map(|(n, w)| (&self.nodes[n.index()], w))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Full-scan check of the schema, weight and acyclicity invariants.
    pub fn validate(&self) -> Result<(), GraphError> {
        for e in &self.edges {
            let (ws, wd) = e.rel.signature();
            let (s, d) = (self.nodes[e.src.index()].label, self.nodes[e.dst.index()].label);
            if s != ws || d != wd {
                return Err(GraphError::SchemaViolation { rel: e.rel, src: s, dst: d });
            }
            if !(0.0..=1.0).contains(&e.weight) {
                return Err(GraphError::WeightOutOfRange(e.weight));
            }
        }
        if self.subclass_topological_order().is_none() {
            return Err(GraphError::CycleIntroduced {
                src: String::new(),
                dst: String::new(),
            });
        }
        Ok(())
    }

    /// Kahn ordering of the subclass_of subgraph; `None` on a cycle.
    pub fn subclass_topological_order(&self) -> Option<Vec<NodeIdx>> {
        let services = self.indices_with_label(NodeLabel::Service);
        let mut indeg: HashMap<NodeIdx, usize> = services
            .iter()
            .map(|&s| (s, self.in_edges(s, RelationType::SubclassOf).count()))
            .collect();
        let mut ready: VecDeque<NodeIdx> = services.iter().copied().filter(|s| indeg[s] == 0).collect();
        let mut order = Vec::with_capacity(services.len());
        while let Some(n) = ready.pop_front() {
            order.push(n);
            for (up, _) in self.out_edges(n, RelationType::SubclassOf) {
                let d = indeg.get_mut(&up).expect("service");
                *d -= 1;
                if *d == 0 {
                    ready.push_back(up);
                }
            }
        }
        (order.len() == services.len()).then_some(order)
    }
}

/// Lowercase alphanumerics only; used for spacing-insensitive name matches.
pub fn compact_key(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub labels: Vec<(NodeLabel, usize)>,
    pub relations: Vec<(RelationType, usize)>,
    pub nodes: usize,
    pub edges: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Graph {
        let mut g = Graph::new();
        g.add_node(Node::new(NodeLabel::Manufacturer, "1stmanufacturing.com")).unwrap();
        g.add_node(Node::new(NodeLabel::Service, "machining")).unwrap();
        g.add_node(Node::new(NodeLabel::Service, "milling")).unwrap();
        g.add_node(Node::new(NodeLabel::Service, "painting")).unwrap();
        g.add_node(Node::new(NodeLabel::Location, "California")).unwrap();
        g.add_edge(Edge::new("milling", "machining", RelationType::SubclassOf, 1.0))
            .unwrap();
        g
    }

    #[test]
    fn manufacturer_retrievable_under_label() {
        let g = small();
        let n = g.node("1stmanufacturing.com").unwrap();
        assert_eq!(n.label, NodeLabel::Manufacturer);
        assert_eq!(g.nodes_with_label(NodeLabel::Manufacturer).count(), 1);
    }

    #[test]
    fn identical_readd_is_idempotent() {
        let mut g = small();
        g.add_node(Node::new(NodeLabel::Service, "milling")).unwrap();
        assert_eq!(g.label_count(NodeLabel::Service), 3);
        let err = g.add_node(Node::new(NodeLabel::Location, "milling")).unwrap_err();
        assert!(matches!(err, GraphError::DuplicateId(_)));
    }

    #[test]
    fn singleton_label_index() {
        let mut g = Graph::new();
        g.add_node(Node::new(NodeLabel::Service, "milling")).unwrap();
        assert_eq!(g.indices_with_label(NodeLabel::Service).len(), 1);
    }

    #[test]
    fn canonical_ids() {
        assert_eq!(canonical_manufacturer_id("https://www.Acufab.com/about"), "acufab.com");
        assert_eq!(canonical_manufacturer_id("3axis.us"), "3axis.us");
        assert_eq!(canonical_name("  Heat   Treatment "), "heat treatment");
        assert_eq!(Node::new(NodeLabel::Manufacturer, "www.klsteven.com").id, "klsteven.com");
    }

    #[test]
    fn edge_checks() {
        let mut g = small();
        g.add_edge(Edge::new("1stmanufacturing.com", "milling", RelationType::Provides, 0.8))
            .unwrap();
        let err = g
            .add_edge(Edge::new("milling", "california", RelationType::LocatedIn, 1.0))
            .unwrap_err();
        assert!(matches!(err, GraphError::SchemaViolation { .. }));
        let err = g
            .add_edge(Edge::new("1stmanufacturing.com", "milling", RelationType::Provides, 1.2))
            .unwrap_err();
        assert_eq!(err, GraphError::WeightOutOfRange(1.2));
        let err = g
            .add_edge(Edge::new("nobody.com", "milling", RelationType::Provides, 0.5))
            .unwrap_err();
        assert!(matches!(err, GraphError::MissingEndpoint(_)));
        assert!(g
            .add_edge(Edge::new("x.com", "milling", RelationType::Provides, f64::NAN))
            .is_err());
    }

    #[test]
    fn duplicate_edge_keeps_max_weight() {
        let mut g = small();
        let m = "1stmanufacturing.com";
        g.add_edge(Edge::new(m, "milling", RelationType::Provides, 0.46)).unwrap();
        g.add_edge(Edge::new(m, "milling", RelationType::Provides, 0.8)).unwrap();
        g.add_edge(Edge::new(m, "milling", RelationType::Provides, 0.5)).unwrap();
        assert_eq!(g.relation_count(RelationType::Provides), 1);
        let (mi, si) = (g.idx(m).unwrap(), g.idx("milling").unwrap());
        assert_eq!(g.edge_weight(mi, si, RelationType::Provides), Some(0.8));
    }

    #[test]
    fn subclass_cycles_rejected() {
        let mut g = small();
        let err = g
            .add_edge(Edge::new("machining", "milling", RelationType::SubclassOf, 1.0))
            .unwrap_err();
        assert!(matches!(err, GraphError::CycleIntroduced { .. }));
        let err = g
            .add_edge(Edge::new("painting", "painting", RelationType::SubclassOf, 1.0))
            .unwrap_err();
        assert!(matches!(err, GraphError::CycleIntroduced { .. }));
        assert!(g.subclass_topological_order().is_some());
    }

    #[test]
    fn rollup() {
        let g = small();
        let one = |c| BTreeSet::from([c]);
        assert_eq!(g.rollup_to_categories("machining").unwrap(), one(Category::Machining));
        assert_eq!(g.rollup_to_categories("milling").unwrap(), one(Category::Machining));
        assert_eq!(g.rollup_to_categories("painting").unwrap(), one(Category::Other));
        assert!(matches!(
            g.rollup_to_categories("nothing"),
            Err(GraphError::UnknownNode(_))
        ));
        assert!(matches!(
            g.rollup_to_categories("california"),
            Err(GraphError::WrongLabel { .. })
        ));
    }

    #[test]
    fn frozen_rejects_mutation() {
        let mut g = small();
        g.freeze();
        assert_eq!(
            g.add_node(Node::new(NodeLabel::Service, "x")).unwrap_err(),
            GraphError::FrozenGraph
        );
        assert_eq!(
            g.add_edge(Edge::new("milling", "machining", RelationType::SubclassOf, 1.0))
                .unwrap_err(),
            GraphError::FrozenGraph
        );
    }

    #[test]
    fn ids_must_be_canonical() {
        let mut g = Graph::new();
        let mut n = Node::new(NodeLabel::Service, "Milling");
        n.id = "MILLING".into();
        assert!(matches!(g.add_node(n).unwrap_err(), GraphError::NonCanonicalId { .. }));
        assert!(g.add_node(Node::new(NodeLabel::Service, "  ")).is_err());
    }

    #[test]
    fn wikidata_only_on_services() {
        let mut g = Graph::new();
        let err = g
            .add_node(Node::new(NodeLabel::Location, "Ohio").with_wikidata("Q1"))
            .unwrap_err();
        assert!(matches!(err, GraphError::WrongLabel { .. }));
    }

    #[test]
    fn find_by_name_ignores_spacing() {
        let mut g = Graph::new();
        g.add_node(Node::new(NodeLabel::Certification, "ISO9001")).unwrap();
        let n = g.find_by_name(NodeLabel::Certification, "ISO 9001").unwrap();
        assert_eq!(n.id, "iso9001");
    }
}
