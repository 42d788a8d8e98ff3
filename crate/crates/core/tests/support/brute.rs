//! Exhaustive reference evaluator for MSQL and a random (graph, query)
//! generator. The evaluator enumerates every assignment of every pattern
//! node to every graph node and checks each constraint directly, sharing
//! nothing with the engine beyond the AST and node property accessors.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::str::FromStr;

use mskg_core::graph::{Edge, Graph, Node, NodeLabel, RelationType};
use mskg_core::query::{CmpOp, Direction, Expr, Item, NodePat, Pattern, Prop, Query, ResultTable, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Frame {
    /// names of pattern nodes; anonymous ones get `#k`
    vars: Vec<String>,
    nodes: Vec<(usize, NodePat)>,
    edges: Vec<(usize, usize, Option<String>, Direction)>,
}

fn frame(patterns: &[Pattern], fixed: &[String]) -> Frame {
    let mut f = Frame {
        vars: fixed.to_vec(),
        nodes: Vec::new(),
        edges: Vec::new(),
    };
    let mut anon = 0;
    let mut slot = |f: &mut Frame, np: &NodePat| -> usize {
        let name = match &np.var {
            Some(v) => v.clone(),
            None => {
                anon += 1;
                format!("#{anon}")
            }
        };
        let i = match f.vars.iter().position(|v| *v == name) {
            Some(i) => i,
            None => {
                f.vars.push(name);
                f.vars.len() - 1
            }
        };
        f.nodes.push((i, np.clone()));
        i
    };
    for p in patterns {
        let mut prev = slot(&mut f, &p.start);
        for (step, np) in &p.steps {
            let cur = slot(&mut f, np);
            f.edges.push((prev, cur, step.rel.clone(), step.dir));
            prev = cur;
        }
    }
    f
}

struct Oracle<'g> {
    g: &'g Graph,
    nodes: Vec<&'g Node>,
    edges: HashSet<(String, String, RelationType)>,
    any_edge: HashSet<(String, String)>,
}

impl<'g> Oracle<'g> {
    fn new(g: &'g Graph) -> Self {
        let mut edges = HashSet::new();
        let mut any_edge = HashSet::new();
        for e in g.edges() {
            edges.insert((e.src.id.clone(), e.dst.id.clone(), e.rel));
            any_edge.insert((e.src.id.clone(), e.dst.id.clone()));
        }
        Oracle {
            g,
            nodes: g.nodes().collect(),
            edges,
            any_edge,
        }
    }

    fn linked(&self, a: &Node, b: &Node, rel: &Option<String>) -> bool {
        match rel {
            None => self.any_edge.contains(&(a.id.clone(), b.id.clone())),
            Some(r) => {
                let r = RelationType::from_str(r).expect("known relation");
                self.edges.contains(&(a.id.clone(), b.id.clone(), r))
            }
        }
    }

    fn node_ok(&self, n: &Node, np: &NodePat) -> bool {
        if let Some(l) = &np.label {
            if NodeLabel::from_str(l).expect("known label") != n.label {
                return false;
            }
        }
        match &np.prop {
            Some((k, v)) => Prop::parse(k).expect("known prop").matches(n, v),
            None => true,
        }
    }

    fn frame_ok(&self, f: &Frame, a: &[usize]) -> bool {
        f.nodes.iter().all(|(i, np)| self.node_ok(self.nodes[a[*i]], np))
            && f.edges.iter().all(|(s, d, rel, dir)| {
                let (x, y) = (self.nodes[a[*s]], self.nodes[a[*d]]);
                match dir {
                    Direction::Out => self.linked(x, y, rel),
                    Direction::In => self.linked(y, x, rel),
                    Direction::Either => self.linked(x, y, rel) || self.linked(y, x, rel),
                }
            })
    }

    /// Calls `visit` for every satisfying assignment of the frame's free
    /// variables (those past `fixed.len()`).
    fn enumerate(&self, f: &Frame, fixed: &[usize], visit: &mut dyn FnMut(&[usize]) -> bool) {
        let n = self.nodes.len();
        let free = f.vars.len() - fixed.len();
        let mut a: Vec<usize> = fixed.iter().copied().chain(std::iter::repeat_n(0, free)).collect();
        if n == 0 && free > 0 {
            return;
        }
        loop {
            if self.frame_ok(f, &a) && !visit(&a) {
                return;
            }
            let mut k = fixed.len();
            loop {
                if k == a.len() {
                    return;
                }
                a[k] += 1;
                if a[k] < n {
                    break;
                }
                a[k] = 0;
                k += 1;
            }
        }
    }

    fn eval(&self, e: &Expr, vars: &[String], a: &[usize]) -> bool {
        match e {
            Expr::Cmp { var, prop, op, value } => {
                let i = vars.iter().position(|v| v == var).expect("bound");
                let hit = Prop::parse(prop).expect("prop").matches(self.nodes[a[i]], &value.as_text());
                match op {
                    CmpOp::Eq => hit,
                    CmpOp::Ne => !hit,
                }
            }
            Expr::And(x, y) => self.eval(x, vars, a) && self.eval(y, vars, a),
            Expr::Or(x, y) => self.eval(x, vars, a) || self.eval(y, vars, a),
            Expr::NotExists(p) => {
                let named: Vec<String> = vars.iter().filter(|v| !v.starts_with('#')).cloned().collect();
                let fixed: Vec<usize> = named
                    .iter()
                    .map(|v| a[vars.iter().position(|w| w == v).unwrap()])
                    .collect();
                let sub = frame(std::slice::from_ref(p), &named);
                let mut found = false;
                self.enumerate(&sub, &fixed, &mut |_| {
                    found = true;
                    false
                });
                !found
            }
        }
    }
}

pub fn brute(q: &Query, g: &Graph) -> ResultTable {
    let o = Oracle::new(g);
    let f = frame(&q.patterns, &[]);
    let grouped = q.returns.iter().any(Item::is_aggregate);
    let cell = |it: &Item, a: &[usize]| -> Value {
        let idx = |v: &str| a[f.vars.iter().position(|w| w == v).expect("bound")];
        match it {
            Item::Var(v) => Value::Node {
                node: o.nodes[idx(v)].id.clone(),
            },
            Item::Prop(v, p) => Prop::parse(p).unwrap().value(o.nodes[idx(v)]),
            Item::Count(_) => Value::Null,
        }
    };
    let mut rows: Vec<Vec<Value>> = Vec::new();
    o.enumerate(&f, &[], &mut |a| {
        if q.filter.as_ref().is_none_or(|e| o.eval(e, &f.vars, a)) {
            rows.push(q.returns.iter().map(|it| cell(it, a)).collect());
        }
        true
    });
    if grouped {
        let mut groups: BTreeMap<Vec<Value>, i64> = BTreeMap::new();
        for r in &rows {
            let key: Vec<Value> = q
                .returns
                .iter()
                .zip(r)
                .filter(|(it, _)| !it.is_aggregate())
                .map(|(_, v)| v.clone())
                .collect();
            *groups.entry(key).or_default() += 1;
        }
        if groups.is_empty() && q.returns.iter().all(Item::is_aggregate) {
            groups.insert(Vec::new(), 0);
        }
        rows = groups
            .into_iter()
            .map(|(key, n)| {
                let mut it = key.into_iter();
                q.returns
                    .iter()
                    .map(|i| if i.is_aggregate() { Value::Int(n) } else { it.next().unwrap() })
                    .collect()
            })
            .collect();
    }
    let col = q
        .order
        .as_ref()
        .map(|ob| (q.returns.iter().position(|i| *i == ob.item).unwrap(), ob.descending));
    rows.sort_by(|x, y| {
        let p = match col {
            Some((i, true)) => y[i].cmp(&x[i]),
            Some((i, false)) => x[i].cmp(&y[i]),
            None => std::cmp::Ordering::Equal,
        };
        p.then_with(|| x.cmp(y))
    });
    if let Some(l) = q.limit {
        rows.truncate(l as usize);
    }
    let _ = o.g;
    ResultTable {
        columns: q.returns.iter().map(|i| i.to_string()).collect(),
        rows,
    }
}

const LABELS: [NodeLabel; 4] = [
    NodeLabel::Manufacturer,
    NodeLabel::Service,
    NodeLabel::Certification,
    NodeLabel::Location,
];

/// Random schema-valid graph with at most `max_nodes` nodes.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> Graph {
    let mut g = Graph::new();
    let n = rng.random_range(max_nodes.min(3)..=max_nodes);
    let mut by_label: HashMap<NodeLabel, Vec<String>> = HashMap::new();
    for i in 0..n {
        let label = LABELS[rng.random_range(0..4)];
        let mut node = Node::new(label, &format!("n{i}"));
        if label == NodeLabel::Service && rng.random_bool(0.5) {
            node = node.with_wikidata(format!("Q{}", rng.random_range(1..4)));
        }
        let id = g.add_node(node).unwrap();
        by_label.entry(label).or_default().push(id);
    }
    let tries = rng.random_range(n..=4 * n);
    for _ in 0..tries {
        let rel = RelationType::ALL[rng.random_range(0..4)];
        let (a, b) = rel.signature();
        let (Some(src), Some(dst)) = (by_label.get(&a), by_label.get(&b)) else {
            continue;
        };
        let s = src[rng.random_range(0..src.len())].clone();
        let d = dst[rng.random_range(0..dst.len())].clone();
        if rel == RelationType::SubclassOf && s <= d {
            continue;
        }
        let w = rng.random_range(1..=10) as f64 / 10.0;
        let _ = g.add_edge(Edge::new(s, d, rel, w));
    }
    g.freeze();
    g
}

const VARS: [&str; 4] = ["a", "b", "c", "d"];
const RELS: [&str; 4] = ["provides", "subclass_of", "certified_with", "located_in"];

fn node_text(rng: &mut ChaCha8Rng, var: Option<&str>, n_nodes: usize) -> String {
    let mut s = String::from("(");
    if let Some(v) = var {
        s.push_str(v);
    }
    if rng.random_bool(0.35) {
        s.push(':');
        s.push_str(LABELS[rng.random_range(0..4)].as_str());
    }
    if rng.random_bool(0.12) {
        let key = if rng.random_bool(0.5) { "name" } else { "id" };
        s.push_str(&format!(" {{{key}: 'n{}'}}", rng.random_range(0..n_nodes.max(1) + 1)));
    }
    s.push(')');
    s
}

fn step_text(rng: &mut ChaCha8Rng) -> String {
    let rel = if rng.random_bool(0.8) {
        format!(":{}", RELS[rng.random_range(0..4)])
    } else {
        String::new()
    };
    match rng.random_range(0..3) {
        0 => format!("-[{rel}]->"),
        1 => format!("<-[{rel}]-"),
        _ => format!("-[{rel}]-"),
    }
}

fn pick_var(rng: &mut ChaCha8Rng, bound: &mut Vec<String>, allow_anon: bool) -> Option<String> {
    if allow_anon && rng.random_bool(0.2) {
        return None;
    }
    let v = VARS[rng.random_range(0..VARS.len())].to_string();
    if !bound.contains(&v) {
        bound.push(v.clone());
    }
    Some(v)
}

fn pattern_text(rng: &mut ChaCha8Rng, bound: &mut Vec<String>, n_nodes: usize, max_steps: usize) -> String {
    let v = pick_var(rng, bound, true);
    let mut s = node_text(rng, v.as_deref(), n_nodes);
    for _ in 0..rng.random_range(0..=max_steps) {
        s.push_str(&step_text(rng));
        let v = pick_var(rng, bound, true);
        s.push_str(&node_text(rng, v.as_deref(), n_nodes));
    }
    s
}

fn cond_text(rng: &mut ChaCha8Rng, bound: &[String], n_nodes: usize, depth: usize) -> String {
    let choice = if depth == 0 { rng.random_range(0..2) } else { rng.random_range(0..4) };
    match choice {
        0 => {
            let v = &bound[rng.random_range(0..bound.len())];
            let (prop, val) = match rng.random_range(0..3) {
                0 => ("name", format!("n{}", rng.random_range(0..n_nodes + 1))),
                1 => ("id", format!("N{}", rng.random_range(0..n_nodes + 1))),
                _ => ("wikidata_id", format!("q{}", rng.random_range(1..4))),
            };
            let op = if rng.random_bool(0.5) { "=" } else { "<>" };
            format!("{v}.{prop} {op} '{val}'")
        }
        1 => {
            let anchor = &bound[rng.random_range(0..bound.len())];
            let mut s = format!("({anchor})");
            for _ in 0..rng.random_range(1..=2) {
                s.push_str(&step_text(rng));
                let inner = if rng.random_bool(0.3) {
                    Some(bound[rng.random_range(0..bound.len())].clone())
                } else if rng.random_bool(0.5) {
                    Some("z".to_string())
                } else {
                    None
                };
                s.push_str(&node_text(rng, inner.as_deref(), n_nodes));
            }
            format!("NOT EXISTS ({s})")
        }
        2 => format!(
            "{} AND {}",
            cond_text(rng, bound, n_nodes, depth - 1),
            cond_text(rng, bound, n_nodes, depth - 1)
        ),
        _ => format!(
            "({} OR {})",
            cond_text(rng, bound, n_nodes, depth - 1),
            cond_text(rng, bound, n_nodes, depth - 1)
        ),
    }
}

/// Random MATCH … RETURN text over at most four named variables.
pub fn random_query(rng: &mut ChaCha8Rng, n_nodes: usize) -> String {
    let mut bound = Vec::new();
    let mut pats = Vec::new();
    for _ in 0..rng.random_range(1..=2) {
        pats.push(pattern_text(rng, &mut bound, n_nodes, 2));
    }
    if bound.is_empty() {
        bound.push("a".into());
        pats.push("(a)".into());
    }
    let mut q = format!("MATCH {}", pats.join(", "));
    if rng.random_bool(0.5) {
        q.push_str(&format!(" WHERE {}", cond_text(rng, &bound, n_nodes, 2)));
    }
    let mut items: Vec<String> = Vec::new();
    for v in &bound {
        match rng.random_range(0..4) {
            0 => items.push(v.clone()),
            1 => items.push(format!("{v}.name")),
            2 => items.push(format!("{v}.wikidata_id")),
            _ => {}
        }
    }
    if items.is_empty() || rng.random_bool(0.35) {
        items.push(format!("count({})", bound[0]));
    }
    q.push_str(&format!(" RETURN {}", items.join(", ")));
    if rng.random_bool(0.4) {
        let it = &items[rng.random_range(0..items.len())];
        let dir = ["", " ASC", " DESC"][rng.random_range(0..3)];
        q.push_str(&format!(" ORDER BY {it}{dir}"));
    }
    if rng.random_bool(0.3) {
        q.push_str(&format!(" LIMIT {}", rng.random_range(1..6)));
    }
    q
}

pub type TestRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random WHERE condition over the given bound variables.
pub fn random_condition(rng: &mut ChaCha8Rng, bound: &[String], n_nodes: usize, depth: usize) -> String {
    cond_text(rng, bound, n_nodes, depth)
}

/// Random `NOT EXISTS (...)` anchored at one of the bound variables.
pub fn random_not_exists(rng: &mut ChaCha8Rng, bound: &[String], n_nodes: usize) -> String {
    loop {
        let c = cond_text(rng, bound, n_nodes, 0);
        if c.starts_with("NOT EXISTS") {
            return c;
        }
    }
}
