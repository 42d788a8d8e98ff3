//! MSQL: a small declarative pattern language over the graph.
//!
//! ```text
//! MATCH (m:Manufacturer)-[:provides]->(s:Service {name:'milling'}),
//!       (m)-[:located_in]->(l:Location)
//! WHERE NOT EXISTS ((m)-[:certified_with]->(:Certification {name:'AWS'}))
//! RETURN l.name, count(m) ORDER BY count(m) DESC LIMIT 5
//! ```
//!
//! Matching uses node-assignment (homomorphism) semantics and produces one
//! row per distinct assignment of the MATCH variables. Returning `count(..)`
//! groups by the remaining items. Rows are ordered by the ORDER BY item
//! and then lexicographically over the whole row, so output is
//! deterministic.

mod exec;
mod lexer;
mod parser;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{canonical_id, compact_key, Node};

pub use exec::execute;
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at {line}:{column}: expected {}, found {found}", expected.join(" | "))]
    Syntax {
        line: usize,
        column: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("variable `{0}` is not bound by MATCH")]
    UnboundVariable(String),
    #[error("nested aggregate at {line}:{column}")]
    NestedAggregate { line: usize, column: usize },
    #[error("ORDER BY item `{0}` must also be returned")]
    InvalidOrder(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub patterns: Vec<Pattern>,
    pub filter: Option<Expr>,
    pub returns: Vec<Item>,
    pub order: Option<OrderBy>,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub start: NodePat,
    pub steps: Vec<(Step, NodePat)>,
}

impl Pattern {
    pub fn nodes(&self) -> impl Iterator<Item = &NodePat> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|(_, n)| n))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodePat {
    pub var: Option<String>,
    pub label: Option<String>,
    pub prop: Option<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// `-[..]->`
    Out,
    /// `<-[..]-`
    In,
    /// `-[..]-`
    Either,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub rel: Option<String>,
    pub dir: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Literal {
    Str(String),
    Int(i64),
}

impl Literal {
    pub fn as_text(&self) -> String {
        match self {
            Literal::Str(s) => s.clone(),
            Literal::Int(i) => i.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    Cmp {
        var: String,
        prop: String,
        op: CmpOp,
        value: Literal,
    },
    NotExists(Pattern),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Item {
    Var(String),
    Prop(String, String),
    Count(String),
}

impl Item {
    pub fn var(&self) -> &str {
        match self {
            Item::Var(v) | Item::Prop(v, _) | Item::Count(v) => v,
        }
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self, Item::Count(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderBy {
    pub item: Item,
    pub descending: bool,
}

/// Node properties visible to queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prop {
    Name,
    Id,
    WikidataId,
}

impl Prop {
    pub fn parse(name: &str) -> Result<Prop, QueryError> {
        match name.to_ascii_lowercase().as_str() {
            "name" => Ok(Prop::Name),
            "id" => Ok(Prop::Id),
            "wikidata_id" | "wikidataid" => Ok(Prop::WikidataId),
            _ => Err(QueryError::UnknownProperty(name.to_string())),
        }
    }

    pub fn value(self, node: &Node) -> Value {
        match self {
            Prop::Name => Value::Str(node.name.clone()),
            Prop::Id => Value::Str(node.id.clone()),
            Prop::WikidataId => node.wikidata_id.clone().map_or(Value::Null, Value::Str),
        }
    }

    /// Equality between a node's property and a query literal. Names match
    /// case- and spacing-insensitively; ids match verbatim or after
    /// canonicalization; a missing property equals nothing.
    pub fn matches(self, node: &Node, literal: &str) -> bool {
        match self {
            Prop::Name => {
                let key = compact_key(literal);
                compact_key(&node.name) == key || compact_key(&node.id) == key
            }
            Prop::Id => node.id == literal || node.id == canonical_id(node.label, literal),
            Prop::WikidataId => node
                .wikidata_id
                .as_deref()
                .is_some_and(|w| w.eq_ignore_ascii_case(literal.trim())),
        }
    }
}

/// A result cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Int(i64),
    Str(String),
    Node { node: String },
}

impl Value {
    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Int(_) => 1,
            Value::Str(_) => 2,
            Value::Node { .. } => 3,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            Value::Node { node } => Some(node),
            _ => None,
        }
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            (Value::Node { node: a }, Value::Node { node: b }) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => Ok(()),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => f.write_str(s),
            Value::Node { node } => f.write_str(node),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl ResultTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("table serializes")
    }
}

/// Tab-separated, header first.
impl fmt::Display for ResultTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.columns.join("\t"))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", cells.join("\t"))?;
        }
        Ok(())
    }
}

/// Parses and executes in one call.
pub fn run(text: &str, graph: &crate::graph::Graph) -> Result<ResultTable, QueryError> {
    execute(&parse(text)?, graph)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        if c == '\'' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('\'');
    out
}

impl fmt::Display for NodePat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        if let Some(v) = &self.var {
            f.write_str(v)?;
        }
        if let Some(l) = &self.label {
            write!(f, ":{l}")?;
        }
        if let Some((k, v)) = &self.prop {
            if self.var.is_some() || self.label.is_some() {
                f.write_str(" ")?;
            }
            write!(f, "{{{k}: {}}}", quote(v))?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = self.rel.as_ref().map(|r| format!(":{r}")).unwrap_or_default();
        match self.dir {
            Direction::Out => write!(f, "-[{rel}]->"),
            Direction::In => write!(f, "<-[{rel}]-"),
            Direction::Either => write!(f, "-[{rel}]-"),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (step, node) in &self.steps {
            write!(f, "{step}{node}")?;
        }
        Ok(())
    }
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            _ => 3,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, parent: u8, right: bool) -> fmt::Result {
        let p = self.precedence();
        if p < parent || (right && p == parent) {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Cmp { var, prop, op, value } => {
                let op = match op {
                    CmpOp::Eq => "=",
                    CmpOp::Ne => "<>",
                };
                let value = match value {
                    Literal::Str(s) => quote(s),
                    Literal::Int(i) => i.to_string(),
                };
                write!(f, "{var}.{prop} {op} {value}")
            }
            Expr::NotExists(p) => write!(f, "NOT EXISTS ({p})"),
            Expr::And(a, b) | Expr::Or(a, b) => {
                let (p, word) = if matches!(self, Expr::And(..)) { (2, "AND") } else { (1, "OR") };
                a.fmt_child(f, p, false)?;
                write!(f, " {word} ")?;
                b.fmt_child(f, p, true)
            }
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Var(v) => f.write_str(v),
            Item::Prop(v, p) => write!(f, "{v}.{p}"),
            Item::Count(v) => write!(f, "count({v})"),
        }
    }
}

/// Canonical single-line form; parsing it yields the same AST.
impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pats: Vec<String> = self.patterns.iter().map(|p| p.to_string()).collect();
        write!(f, "MATCH {}", pats.join(", "))?;
        if let Some(e) = &self.filter {
            write!(f, " WHERE {e}")?;
        }
        let items: Vec<String> = self.returns.iter().map(|i| i.to_string()).collect();
        write!(f, " RETURN {}", items.join(", "))?;
        if let Some(o) = &self.order {
            write!(f, " ORDER BY {} {}", o.item, if o.descending { "DESC" } else { "ASC" })?;
        }
        if let Some(l) = self.limit {
            write!(f, " LIMIT {l}")?;
        }
        Ok(())
    }
}
