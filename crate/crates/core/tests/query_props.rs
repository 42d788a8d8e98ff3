mod support;

use std::collections::BTreeSet;

use mskg_core::query::{execute, parse, CmpOp, Expr, Item, Query};
use support::brute::{brute, random_condition, random_graph, random_not_exists, random_query, seeded};

#[test]
fn execute_matches_brute_force() {
    let mut rng = seeded(2024);
    let mut nonempty = 0;
    for case in 0..500 {
        let g = random_graph(&mut rng, 12);
        let text = random_query(&mut rng, g.node_count());
        let q = parse(&text).unwrap_or_else(|e| panic!("case {case}: {text}: {e}"));
        let got = execute(&q, &g).unwrap();
        let want = brute(&q, &g);
        assert_eq!(got, want, "case {case}: {text}");
        if !got.rows.is_empty() {
            nonempty += 1;
        }
    }
    // the generator must exercise non-trivial answers
    assert!(nonempty > 150, "only {nonempty} non-empty results");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let mut rng = seeded(7);
    for _ in 0..50 {
        let g = random_graph(&mut rng, 12);
        let q = parse(&random_query(&mut rng, g.node_count())).unwrap();
        let a = execute(&q, &g).unwrap();
        let b = execute(&q, &g).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.to_string(), b.to_string());
    }
}

#[test]
fn pattern_order_does_not_change_results() {
    let mut rng = seeded(99);
    let mut checked = 0;
    while checked < 100 {
        let g = random_graph(&mut rng, 12);
        let mut q = parse(&random_query(&mut rng, g.node_count())).unwrap();
        if q.patterns.len() < 2 {
            continue;
        }
        let a = execute(&q, &g).unwrap();
        q.patterns.reverse();
        let b = execute(&q, &g).unwrap();
        assert_eq!(a, b);
        checked += 1;
    }
}

fn count_of(q: &Query, g: &mskg_core::Graph) -> i64 {
    let mut q = q.clone();
    q.returns = vec![Item::Count(q.patterns[0].nodes().find_map(|n| n.var.clone()).unwrap())];
    q.order = None;
    q.limit = None;
    execute(&q, g).unwrap().rows[0][0].as_int().unwrap()
}

/// The MATCH part of a random query with every node named, so rows are
/// distinct variable bindings.
fn named_match(rng: &mut support::brute::TestRng, n_nodes: usize) -> (Query, Vec<String>) {
    let mut q = parse(&random_query(rng, n_nodes)).unwrap();
    let mut k = 0;
    for p in &mut q.patterns {
        let mut fix = |n: &mut mskg_core::query::NodePat| {
            if n.var.is_none() {
                n.var = Some(format!("v{k}"));
                k += 1;
            }
        };
        fix(&mut p.start);
        for (_, n) in &mut p.steps {
            fix(n);
        }
    }
    let vars: BTreeSet<String> = q.patterns.iter().flat_map(|p| p.nodes().filter_map(|n| n.var.clone())).collect();
    q.filter = None;
    q.order = None;
    q.limit = None;
    q.returns = vars.iter().cloned().map(Item::Var).collect();
    (q, vars.into_iter().collect())
}

fn negate(e: &Expr) -> Expr {
    match e {
        Expr::Cmp { var, prop, op, value } => Expr::Cmp {
            var: var.clone(),
            prop: prop.clone(),
            op: match op {
                CmpOp::Eq => CmpOp::Ne,
                CmpOp::Ne => CmpOp::Eq,
            },
            value: value.clone(),
        },
        Expr::And(a, b) => Expr::Or(Box::new(negate(a)), Box::new(negate(b))),
        Expr::Or(a, b) => Expr::And(Box::new(negate(a)), Box::new(negate(b))),
        Expr::NotExists(_) => unreachable!("comparison trees only"),
    }
}

fn has_not_exists(e: &Expr) -> bool {
    match e {
        Expr::NotExists(_) => true,
        Expr::And(a, b) | Expr::Or(a, b) => has_not_exists(a) || has_not_exists(b),
        Expr::Cmp { .. } => false,
    }
}

#[test]
fn condition_and_negation_partition_rows() {
    let mut rng = seeded(5150);
    let mut checked = 0;
    while checked < 200 {
        let g = random_graph(&mut rng, 12);
        let (base, vars) = named_match(&mut rng, g.node_count());
        let cond_text = random_condition(&mut rng, &vars, g.node_count(), 2);
        let with_text = format!("{} WHERE {cond_text} RETURN {}", match_text(&base), vars[0]);
        let with = parse(&with_text).unwrap();
        let cond = with.filter.clone().unwrap();
        if has_not_exists(&cond) {
            continue;
        }
        let mut without = with.clone();
        without.filter = Some(negate(&cond));
        assert_eq!(count_of(&base, &g), count_of(&with, &g) + count_of(&without, &g), "{with_text}");
        checked += 1;
    }
}

fn match_text(q: &Query) -> String {
    let full = q.to_string();
    full[..full.find(" RETURN ").unwrap()].to_string()
}

#[test]
fn not_exists_complements_exists() {
    let mut rng = seeded(6060);
    for _ in 0..200 {
        let g = random_graph(&mut rng, 12);
        let (base, vars) = named_match(&mut rng, g.node_count());
        let ne = random_not_exists(&mut rng, &vars, g.node_count());
        let anti = parse(&format!("{} WHERE {ne} RETURN {}", match_text(&base), vars[0])).unwrap();
        let Some(Expr::NotExists(p)) = anti.filter.clone() else { unreachable!() };
        // EXISTS as a join, projected back onto the outer bindings
        let mut join = base.clone();
        join.patterns.push(p);
        let mut hit = execute(&join, &g).unwrap().rows;
        hit.dedup();
        assert_eq!(count_of(&base, &g), count_of(&anti, &g) + hit.len() as i64, "{ne}");
    }
}
