use std::collections::{BTreeMap, HashMap};

use super::{CmpOp, Direction, Expr, Item, Pattern, Prop, Query, QueryError, ResultTable, Value};
use crate::graph::{Graph, NodeIdx, NodeLabel, RelationType};

type Assign = Vec<Option<NodeIdx>>;

#[derive(Debug)]
struct NodeCon {
    var: usize,
    label: Option<NodeLabel>,
    prop: Option<(Prop, String)>,
}

#[derive(Debug)]
struct EdgeCon {
    a: usize,
    b: usize,
    /// Empty means any relation.
    rels: Vec<RelationType>,
    dir: Direction,
}

/// One conjunctive sub-problem: variables it binds plus the node and edge
/// constraints it checks.
#[derive(Debug, Default)]
struct Scope {
    vars: Vec<usize>,
    nodes: Vec<NodeCon>,
    edges: Vec<EdgeCon>,
}

#[derive(Debug)]
enum CExpr {
    Cmp { var: usize, prop: Prop, eq: bool, value: String },
    NotExists(Scope),
    And(Box<CExpr>, Box<CExpr>),
    Or(Box<CExpr>, Box<CExpr>),
}

struct Compiler {
    names: HashMap<String, usize>,
    count: usize,
}

impl Compiler {
    fn fresh(&mut self) -> usize {
        self.count += 1;
        self.count - 1
    }

    fn var(&mut self, name: Option<&str>, scope: &mut Scope, names: &mut HashMap<String, usize>) -> usize {
        match name {
            Some(n) => {
                if let Some(&i) = names.get(n) {
                    return i;
                }
                let i = self.fresh();
                names.insert(n.to_string(), i);
                scope.vars.push(i);
                i
            }
            None => {
                let i = self.fresh();
                scope.vars.push(i);
                i
            }
        }
    }

    fn pattern(&mut self, p: &Pattern, scope: &mut Scope, names: &mut HashMap<String, usize>) -> Result<(), QueryError> {
        let mut prev = None;
        let mut pending: Option<&super::Step> = None;
        for (i, np) in p.nodes().enumerate() {
            let v = self.var(np.var.as_deref(), scope, names);
            let label = np
                .label
                .as_deref()
                .map(|l| l.parse::<NodeLabel>().map_err(|_| QueryError::UnknownLabel(l.to_string())))
                .transpose()?;
            let prop = match &np.prop {
                Some((k, val)) => Some((Prop::parse(k)?, val.clone())),
                None => None,
            };
            if label.is_some() || prop.is_some() {
                scope.nodes.push(NodeCon { var: v, label, prop });
            }
            if let (Some(a), Some(step)) = (prev, pending) {
                let rels = match &step.rel {
                    Some(r) => vec![r
                        .parse::<RelationType>()
                        .map_err(|_| QueryError::UnknownRelation(r.clone()))?],
                    None => Vec::new(),
                };
                scope.edges.push(EdgeCon { a, b: v, rels, dir: step.dir });
            }
            prev = Some(v);
            pending = p.steps.get(i).map(|(s, _)| s);
        }
        Ok(())
    }

    fn expr(&mut self, e: &Expr) -> Result<CExpr, QueryError> {
        Ok(match e {
            Expr::Cmp { var, prop, op, value } => CExpr::Cmp {
                var: *self.names.get(var).ok_or_else(|| QueryError::UnboundVariable(var.clone()))?,
                prop: Prop::parse(prop)?,
                eq: *op == CmpOp::Eq,
                value: value.as_text(),
            },
            Expr::NotExists(p) => {
                let mut scope = Scope::default();
                let mut names = self.names.clone();
                self.pattern(p, &mut scope, &mut names)?;
                CExpr::NotExists(scope)
            }
            Expr::And(a, b) => CExpr::And(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            Expr::Or(a, b) => CExpr::Or(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
        })
    }
}

const ALL_RELS: [RelationType; 4] = RelationType::ALL;

fn rels_of(e: &EdgeCon) -> &[RelationType] {
    if e.rels.is_empty() {
        &ALL_RELS
    } else {
        &e.rels
    }
}

fn edge_holds(g: &Graph, e: &EdgeCon, a: NodeIdx, b: NodeIdx) -> bool {
    rels_of(e).iter().any(|&r| match e.dir {
        Direction::Out => g.edge_weight(a, b, r).is_some(),
        Direction::In => g.edge_weight(b, a, r).is_some(),
        Direction::Either => g.edge_weight(a, b, r).is_some() || g.edge_weight(b, a, r).is_some(),
    })
}

fn node_holds(g: &Graph, c: &NodeCon, n: NodeIdx) -> bool {
    let node = g.node_at(n);
    c.label.is_none_or(|l| node.label == l) && c.prop.as_ref().is_none_or(|(p, v)| p.matches(node, v))
}

/// Nodes adjacent to `from` through `e`, where `from` sits at the `a` end
/// when `from_a` is set.
fn expand(g: &Graph, e: &EdgeCon, from: NodeIdx, from_a: bool) -> Vec<NodeIdx> {
    let mut out = Vec::new();
    for &r in rels_of(e) {
        let forward = matches!((e.dir, from_a), (Direction::Out, true) | (Direction::In, false));
        let backward = matches!((e.dir, from_a), (Direction::In, true) | (Direction::Out, false));
        if forward || e.dir == Direction::Either {
            out.extend(g.out_edges(from, r).map(|(n, _)| n));
        }
        if backward || e.dir == Direction::Either {
            out.extend(g.in_edges(from, r).map(|(n, _)| n));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

struct Solver<'g> {
    g: &'g Graph,
}

impl Solver<'_> {
    /// Enumerates completions of `assign` over the scope's variables. The
    /// callback returns `false` to stop; the return value reports whether
    /// enumeration ran to completion.
    fn search(&self, scope: &Scope, assign: &mut Assign, emit: &mut dyn FnMut(&Assign) -> bool) -> bool {
        for c in &scope.nodes {
            if let Some(n) = assign[c.var] {
                if !node_holds(self.g, c, n) {
                    return true;
                }
            }
        }
        for e in &scope.edges {
            if let (Some(a), Some(b)) = (assign[e.a], assign[e.b]) {
                if !edge_holds(self.g, e, a, b) {
                    return true;
                }
            }
        }
        let mut remaining: Vec<usize> = scope.vars.iter().copied().filter(|&v| assign[v].is_none()).collect();
        self.rec(scope, assign, &mut remaining, emit)
    }

    fn pick(&self, scope: &Scope, assign: &Assign, remaining: &[usize]) -> (usize, Vec<NodeIdx>) {
        let has_prop = |v: usize| scope.nodes.iter().any(|c| c.var == v && c.prop.is_some());
        let mut best: Option<(usize, usize, Option<(usize, NodeIdx, bool)>)> = None;
        for (slot, &v) in remaining.iter().enumerate() {
            let link = scope.edges.iter().enumerate().find_map(|(i, e)| {
                if e.b == v {
                    assign[e.a].map(|n| (i, n, true))
                } else if e.a == v {
                    assign[e.b].map(|n| (i, n, false))
                } else {
                    None
                }
            });
            let rank = match (link.is_some(), has_prop(v)) {
                (_, true) => 0,
                (true, false) => 1,
                (false, false) => 2,
            };
            if best.as_ref().is_none_or(|&(_, r, _)| rank < r) {
                best = Some((slot, rank, link));
            }
        }
        let (slot, _, link) = best.expect("remaining is non-empty");
        let v = remaining[slot];
        let cands = match link {
            Some((i, n, from_a)) => expand(self.g, &scope.edges[i], n, from_a),
            None => {
                let label = scope.nodes.iter().find(|c| c.var == v).and_then(|c| c.label);
                match label {
                    Some(l) => self.g.indices_with_label(l).to_vec(),
                    None => self.g.node_indices().collect(),
                }
            }
        };
        (slot, cands)
    }

    fn rec(&self, scope: &Scope, assign: &mut Assign, remaining: &mut Vec<usize>, emit: &mut dyn FnMut(&Assign) -> bool) -> bool {
        if remaining.is_empty() {
            return emit(assign);
        }
        let (slot, cands) = self.pick(scope, assign, remaining);
        let v = remaining.swap_remove(slot);
        let mut cont = true;
        'cand: for n in cands {
            for c in scope.nodes.iter().filter(|c| c.var == v) {
                if !node_holds(self.g, c, n) {
                    continue 'cand;
                }
            }
            for e in &scope.edges {
                let other = if e.a == v {
                    e.b
                } else if e.b == v {
                    e.a
                } else {
                    continue;
                };
                let on = if other == v { Some(n) } else { assign[other] };
                if let Some(o) = on {
                    let (a, b) = if e.a == v { (n, o) } else { (o, n) };
                    if !edge_holds(self.g, e, a, b) {
                        continue 'cand;
                    }
                }
            }
            assign[v] = Some(n);
            cont = self.rec(scope, assign, remaining, emit);
            assign[v] = None;
            if !cont {
                break;
            }
        }
        remaining.push(v);
        let last = remaining.len() - 1;
        remaining.swap(slot, last);
        cont
    }

    fn eval(&self, e: &CExpr, assign: &Assign) -> bool {
        match e {
            CExpr::Cmp { var, prop, eq, value } => {
                let n = assign[*var].expect("filter variables are bound");
                prop.matches(self.g.node_at(n), value) == *eq
            }
            CExpr::NotExists(scope) => {
                let mut local = assign.clone();
                let mut found = false;
                self.search(scope, &mut local, &mut |_| {
                    found = true;
                    false
                });
                !found
            }
            CExpr::And(a, b) => self.eval(a, assign) && self.eval(b, assign),
            CExpr::Or(a, b) => self.eval(a, assign) || self.eval(b, assign),
        }
    }
}

enum CItem {
    Var(usize),
    Prop(usize, Prop),
    Count,
}

/// Evaluates a parsed query. Rows are deterministic for a given graph.
pub fn execute(q: &Query, g: &Graph) -> Result<ResultTable, QueryError> {
    let mut c = Compiler {
        names: HashMap::new(),
        count: 0,
    };
    let mut main = Scope::default();
    let mut names = HashMap::new();
    for p in &q.patterns {
        c.pattern(p, &mut main, &mut names)?;
    }
    c.names = names;
    let filter = q.filter.as_ref().map(|e| c.expr(e)).transpose()?;
    let items: Vec<CItem> = q
        .returns
        .iter()
        .map(|it| {
            let var = |v: &str| c.names.get(v).copied().ok_or_else(|| QueryError::UnboundVariable(v.to_string()));
            Ok(match it {
                Item::Var(v) => CItem::Var(var(v)?),
                Item::Prop(v, p) => CItem::Prop(var(v)?, Prop::parse(p)?),
                Item::Count(v) => {
                    var(v)?;
                    CItem::Count
                }
            })
        })
        .collect::<Result<_, QueryError>>()?;
    let order_col = match &q.order {
        Some(o) => Some(
            q.returns
                .iter()
                .position(|i| *i == o.item)
                .ok_or_else(|| QueryError::InvalidOrder(o.item.to_string()))?,
        ),
        None => None,
    };

    let solver = Solver { g };
    let grouped = items.iter().any(|i| matches!(i, CItem::Count));
    let cell = |item: &CItem, a: &Assign| -> Value {
        match item {
            CItem::Var(v) => Value::Node {
                node: g.node_at(a[*v].expect("bound")).id.clone(),
            },
            CItem::Prop(v, p) => p.value(g.node_at(a[*v].expect("bound"))),
            CItem::Count => Value::Null,
        }
    };
    let mut rows: Vec<Vec<Value>> = Vec::new();
    let mut groups: BTreeMap<Vec<Value>, i64> = BTreeMap::new();
    let mut assign: Assign = vec![None; c.count];
    solver.search(&main, &mut assign, &mut |a| {
        if filter.as_ref().is_none_or(|f| solver.eval(f, a)) {
            let key: Vec<Value> = items
                .iter()
                .filter(|i| !matches!(i, CItem::Count))
                .map(|i| cell(i, a))
                .collect();
            if grouped {
                *groups.entry(key).or_insert(0) += 1;
            } else {
                rows.push(key);
            }
        }
        true
    });
    if grouped {
        let keyless = items.iter().all(|i| matches!(i, CItem::Count));
        if keyless && groups.is_empty() {
            groups.insert(Vec::new(), 0);
        }
        for (key, n) in groups {
            let mut it = key.into_iter();
            rows.push(
                items
                    .iter()
                    .map(|i| match i {
                        CItem::Count => Value::Int(n),
                        _ => it.next().expect("key per non-aggregate item"),
                    })
                    .collect(),
            );
        }
    }
    let desc = q.order.as_ref().is_some_and(|o| o.descending);
    rows.sort_by(|x, y| {
        let primary = match order_col {
            Some(i) if desc => y[i].cmp(&x[i]),
            Some(i) => x[i].cmp(&y[i]),
            None => std::cmp::Ordering::Equal,
        };
        primary.then_with(|| x.cmp(y))
    });
    if let Some(l) = q.limit {
        rows.truncate(l as usize);
    }
    Ok(ResultTable {
        columns: q.returns.iter().map(|i| i.to_string()).collect(),
        rows,
    })
}
