//! Acceptance report. Prints one status line per criterion and exits
//! non-zero when a hard criterion fails.
//!
//! Criteria that need the published dataset read its path from
//! `MSKG_DATASET` (and optionally precomputed node2vec embeddings from
//! `MSKG_NODE2VEC`). Without it they report UNVERIFIED together with the
//! same check run on a synthetic stand-in, which is informative only.

#[path = "../../core/tests/support/brute.rs"]
mod brute;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use mskg_core::classify::{derive_all, evaluate, fit, train, Dataset, MlpModel, TrainConfig};
use mskg_core::embed::{
    cosine, embed_graph, generate_walks, kmeans, silhouette_sampled, train_graphsage, train_node2vec, ClusterConfig,
    EmbeddingConfig, EmbeddingTable, Method, Projection,
};
use mskg_core::extract::{evaluate_extraction, extract_corpus, load_corpus, ExtractionConfig, LexicalClassifier, Lexicon};
use mskg_core::graph::{canonical_id, Edge, Graph, Node, NodeLabel, RelationType};
use mskg_core::ingest::{load_dataset, validate_manifest, LoadReport, Manifest};
use mskg_core::metrics::{mean_reciprocal_rank, precision_at_n, rates, roc_pr, ConfusionCounts, RankedEntry};
use mskg_core::optim::AdamConfig;
use mskg_core::qa::{run_benchmark, BenchmarkConfig, QaContext};
use mskg_core::query::{execute, parse, ResultTable};
use mskg_core::synthetic::{generate, sample_graph, SyntheticConfig, SAMPLE};
use mskg_serve::{router, Service, Snapshot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

const INTEGRITY_BUDGET: Duration = Duration::from_secs(30);
const AUC_TOL: f64 = 1e-9;
const RATE_TOL: f64 = 1e-12;
const FD_REL_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;
const SEPARABLE_MICRO_F1: f64 = 0.99;
const DATASET_SUBSET_ACCURACY: f64 = 0.90;
const CLASSIFIER_BUDGET: Duration = Duration::from_secs(600);
const CLIQUE_SEPARATION: f64 = 0.2;
const WALK_TOL: f64 = 0.02;
const WALKS: usize = 10_000;
const LIFT_AT_10: f64 = 2.0;
const EXTRACTION_PRECISION: f64 = 0.90;
const EXTRACTION_RECALL: f64 = 0.85;
const QUERY_CASES: usize = 500;
const READERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Unverified,
    SoftPass,
    SoftFail,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Unverified => "UNVERIFIED",
            Status::SoftPass => "PASS (soft)",
            Status::SoftFail => "FAIL (soft, reported only)",
        }
    }
}

struct Outcome {
    status: Status,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

/// Verified parts decide PASS/FAIL; an unverifiable part downgrades a pass
/// to UNVERIFIED.
fn combine(verified_ok: bool, gated: Option<bool>, detail: String) -> Outcome {
    let status = match (verified_ok, gated) {
        (false, _) | (true, Some(false)) => Status::Fail,
        (true, Some(true)) => Status::Pass,
        (true, None) => Status::Unverified,
    };
    Outcome { status, detail }
}

struct Published {
    graph: Graph,
    report: LoadReport,
    elapsed: Duration,
}

struct Ctx {
    dataset_path: Option<PathBuf>,
    published: Option<Result<Published, String>>,
}

impl Ctx {
    fn published(&self) -> Option<&Published> {
        self.published.as_ref().and_then(|r| r.as_ref().ok())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- integrity

fn dataset_integrity(cx: &Ctx) -> Outcome {
    let manifest = Manifest::table3();
    let stated_total = 58_521u64;
    let note = format!(
        "relation rows sum to {} while the stated total is {stated_total}",
        manifest.total_edges()
    );
    match &cx.published {
        Some(Ok(p)) => {
            let rep = validate_manifest(&p.graph, &manifest);
            let deltas: Vec<String> = rep
                .rows
                .iter()
                .filter(|r| r.delta != 0)
                .map(|r| format!("{} {:+}", r.name, r.delta))
                .collect();
            let edges = p.graph.edge_count() as u64;
            outcome(
                rep.is_clean() && p.elapsed < INTEGRITY_BUDGET,
                format!(
                    "{} nodes, {} edges in {:.1}s (sha256 {}); deltas [{}]; {note}; edge count vs stated total {:+}",
                    p.graph.node_count(),
                    edges,
                    p.elapsed.as_secs_f64(),
                    p.report.sha256,
                    deltas.join(", "),
                    edges as i64 - stated_total as i64
                ),
            )
        }
        Some(Err(e)) => outcome(false, format!("loading {:?} failed: {e}", cx.dataset_path)),
        None => {
            let t = Instant::now();
            let s = generate(&SyntheticConfig::default()).expect("synthetic graph builds");
            let rep = validate_manifest(&s.graph, &manifest);
            Outcome {
                status: Status::Unverified,
                detail: format!(
                    "MSKG_DATASET unset; synthetic graph at the published counts: {} deltas, built in {:.1}s; {note}",
                    rep.rows.iter().filter(|r| r.delta != 0).count(),
                    t.elapsed().as_secs_f64()
                ),
            }
        }
    }
}

// ---------------------------------------------------------------- reference questions

const Q4: &str = "How many manufacturers provide additive manufacturing in each state?";
const Q5: &str = "How many manufacturers located in Michigan, provide welding but not certified with AWS?";
const Q6: &str =
    "Which State has the biggest number of manufacturers which provide additive manufacturing and provide casting?";
const Q7: &str = "List Top 5 States which have the biggest number of manufacturers which provide injection molding and are certified with AS9100?";
const Q8: &str = "For manufacturers located in California and certified with ITAR, what service do they provide the most?";
const Q11: &str = "List Top 10 manufacturing services which manufacturer provides the most in North Carolina and how many manufacturers provide them.";

struct Expected {
    michigan_additive: i64,
    michigan_welding_not_aws: i64,
    additive_casting_leader: (&'static str, i64),
    top_injection_as9100: &'static [&'static str],
    california_itar_service: &'static str,
    north_carolina_top: (&'static str, i64),
}

const PUBLISHED_ANSWERS: Expected = Expected {
    michigan_additive: 25,
    michigan_welding_not_aws: 173,
    additive_casting_leader: ("california", 9),
    top_injection_as9100: &["california", "texas", "connecticut", "washington", "ontario"],
    california_itar_service: "machining",
    north_carolina_top: ("machining", 123),
};

/// Hand-counted on the twelve-manufacturer sample graph.
const SAMPLE_ANSWERS: Expected = Expected {
    michigan_additive: 2,
    michigan_welding_not_aws: 2,
    additive_casting_leader: ("california", 2),
    top_injection_as9100: &["california", "texas"],
    california_itar_service: "machining",
    north_carolina_top: ("machining", 3),
};

fn cells(t: &ResultTable) -> Vec<Vec<String>> {
    t.rows
        .iter()
        .map(|r| r.iter().map(|v| v.to_string().to_lowercase()).collect())
        .collect()
}

fn ask(ctx: &QaContext, q: &str) -> Result<Vec<Vec<String>>, String> {
    let b = ctx.answer(q).map_err(|e| e.to_string())?;
    b.table.as_ref().map(cells).ok_or_else(|| format!("no table: {}", b.summary))
}

fn int(s: &str) -> Option<i64> {
    s.parse().ok()
}

/// Returns mismatches, each `name: got vs expected`.
fn reference_mismatches(ctx: &QaContext, want: &Expected) -> Vec<String> {
    let mut bad = Vec::new();
    let mut check = |name: &str, got: Result<String, String>, expected: String| match got {
        Ok(g) if g == expected => {}
        Ok(g) => bad.push(format!("{name}: {g} vs {expected}")),
        Err(e) => bad.push(format!("{name}: {e}")),
    };
    check(
        "Q4 michigan",
        ask(ctx, Q4).map(|rows| {
            rows.iter()
                .find(|r| r[0] == "michigan")
                .map_or("no row".into(), |r| r[1].clone())
        }),
        want.michigan_additive.to_string(),
    );
    check(
        "Q5",
        ask(ctx, Q5).map(|rows| rows.first().map_or("no row".into(), |r| r[0].clone())),
        want.michigan_welding_not_aws.to_string(),
    );
    check(
        "Q6",
        ask(ctx, Q6).map(|rows| rows.first().map_or("no row".into(), |r| format!("{} {}", r[0], r[1]))),
        format!("{} {}", want.additive_casting_leader.0, want.additive_casting_leader.1),
    );
    check(
        "Q7",
        ask(ctx, Q7).map(|rows| {
            let s: BTreeSet<&str> = rows.iter().map(|r| r[0].as_str()).collect();
            s.into_iter().collect::<Vec<_>>().join(",")
        }),
        want.top_injection_as9100.iter().copied().collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>().join(","),
    );
    check(
        "Q8",
        ask(ctx, Q8).map(|rows| rows.first().map_or("no row".into(), |r| r[0].clone())),
        want.california_itar_service.to_string(),
    );
    check(
        "Q11",
        ask(ctx, Q11).map(|rows| {
            rows.first()
                .map_or("no row".into(), |r| format!("{} {}", r[0], int(&r[1]).map_or(r[1].clone(), |n| n.to_string())))
        }),
        format!("{} {}", want.north_carolina_top.0, want.north_carolina_top.1),
    );
    bad
}

fn reference_queries(cx: &Ctx) -> Outcome {
    let proxy = reference_mismatches(&QaContext::new(sample_graph()), &SAMPLE_ANSWERS);
    let proxy_note = if proxy.is_empty() {
        "sample graph answers all six".to_string()
    } else {
        format!("sample graph mismatches [{}]", proxy.join("; "))
    };
    match cx.published() {
        Some(p) => {
            let bad = reference_mismatches(&QaContext::new(p.graph.clone()), &PUBLISHED_ANSWERS);
            let detail = if bad.is_empty() {
                format!("all six answers reproduced; {proxy_note}")
            } else {
                format!(
                    "dataset sha256 {} differs from the reference answers: [{}]; {proxy_note}",
                    p.report.sha256,
                    bad.join("; ")
                )
            };
            combine(proxy.is_empty(), Some(bad.is_empty()), detail)
        }
        None => combine(proxy.is_empty(), None, format!("MSKG_DATASET unset; {proxy_note}")),
    }
}

// ---------------------------------------------------------------- metrics

fn rank_pair_auc(scores: &[(f64, bool)]) -> f64 {
    let pos: Vec<f64> = scores.iter().filter(|s| s.1).map(|s| s.0).collect();
    let neg: Vec<f64> = scores.iter().filter(|s| !s.1).map(|s| s.0).collect();
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

fn metric_oracles(_: &Ctx) -> Outcome {
    let mut r = rng(11);
    let mut worst_auc: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(2..=200);
        let levels = r.random_range(2..=20);
        let mut scores: Vec<(f64, bool)> =
            (0..n).map(|_| (r.random_range(0..levels) as f64 / levels as f64, r.random_bool(0.4))).collect();
        scores[0].1 = true;
        scores[1].1 = false;
        let curves = roc_pr(&scores).expect("both classes present");
        worst_auc = worst_auc.max((curves.auc_roc - rank_pair_auc(&scores)).abs());
    }

    let mut pn_bad = 0;
    let mut mrr_bad = 0;
    for _ in 0..100 {
        let n_services = r.random_range(2..=12);
        // parent[i] < i or none: a random forest over services
        let parent: Vec<Option<usize>> = (0..n_services)
            .map(|i| (i > 0 && r.random_bool(0.5)).then(|| r.random_range(0..i)))
            .collect();
        let ancestors = |mut s: usize| {
            let mut a = vec![s];
            while let Some(p) = parent[s] {
                a.push(p);
                s = p;
            }
            a
        };
        let oracle = |service: &str, ancestor: &str| {
            let (s, a): (usize, usize) = (service[1..].parse().unwrap(), ancestor[1..].parse().unwrap());
            ancestors(s).contains(&a)
        };
        let targets: BTreeSet<String> = (0..n_services).filter(|_| r.random_bool(0.3)).map(|i| format!("s{i}")).collect();
        let len = r.random_range(1..=50);
        let ranking: Vec<RankedEntry> = (0..len)
            .map(|i| RankedEntry {
                id: format!("m{i}"),
                services: (0..n_services).filter(|_| r.random_bool(0.25)).map(|s| format!("s{s}")).collect(),
            })
            .collect();
        let n = r.random_range(1..=60);
        let got = precision_at_n(&targets, &ranking, &oracle, n).unwrap();
        let (mut rel, mut tot) = (0usize, 0usize);
        for e in ranking.iter().take(n) {
            for s in &e.services {
                tot += 1;
                let si: usize = s[1..].parse().unwrap();
                if targets.iter().any(|t| ancestors(si).contains(&t[1..].parse().unwrap())) {
                    rel += 1;
                }
            }
        }
        let want = (tot > 0).then(|| rel as f64 / tot as f64);
        if got.n_relevant != rel || got.n_total != tot || got.value != want {
            pn_bad += 1;
        }

        let queries: Vec<Vec<bool>> = (0..r.random_range(1..=10))
            .map(|_| (0..r.random_range(0..=50)).map(|_| r.random_bool(0.15)).collect())
            .collect();
        let mut sum = 0.0;
        for q in &queries {
            for (i, &hit) in q.iter().enumerate() {
                if hit {
                    sum += 1.0 / (i + 1) as f64;
                    break;
                }
            }
        }
        if mean_reciprocal_rank(&queries).unwrap().mrr != sum / queries.len() as f64 {
            mrr_bad += 1;
        }
    }

    let mut worst_rate: f64 = 0.0;
    for _ in 0..50 {
        let c = ConfusionCounts {
            tp: r.random_range(1..500),
            tn: r.random_range(1..500),
            fp: r.random_range(1..500),
            fn_: r.random_range(1..500),
        };
        let (tp, tn, fp, fne) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
        let acc = (tp + tn) / (tp + tn + fp + fne);
        let p = tp / (tp + fp);
        let rc = tp / (tp + fne);
        let f1 = 2.0 * p * rc / (p + rc);
        let got = rates(c);
        for (g, w) in [(got.accuracy, acc), (got.precision, p), (got.recall, rc), (got.f1, f1)] {
            worst_rate = worst_rate.max((g.unwrap() - w).abs());
        }
    }
    outcome(
        worst_auc <= AUC_TOL && pn_bad == 0 && mrr_bad == 0 && worst_rate <= RATE_TOL,
        format!(
            "AUC max |trapezoid - rank pair| {worst_auc:.2e} (tol {AUC_TOL:.0e}); P@N mismatches {pn_bad}/100; \
             MRR mismatches {mrr_bad}/100; rates max error {worst_rate:.2e} on 50 matrices"
        ),
    )
}

// ---------------------------------------------------------------- classifier

fn separable(n: usize, dim: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut d = Dataset {
        ids: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
    };
    while d.x.len() < n {
        let x: Vec<f64> = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
        if x[..3].iter().any(|v: &f64| v.abs() < 0.3) {
            continue;
        }
        d.y.push((0..3).map(|j| x[j] > 0.0).collect());
        d.ids.push(format!("m{}", d.x.len()));
        d.x.push(x);
    }
    d
}

fn worst_gradient_error() -> f64 {
    let mut r = rng(6);
    let xs: Vec<Vec<f64>> = (0..12).map(|_| (0..7).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let ys: Vec<Vec<bool>> = (0..12).map(|_| (0..4).map(|_| r.random_bool(0.4)).collect()).collect();
    let xr: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let yr: Vec<&[bool]> = ys.iter().map(Vec::as_slice).collect();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let m = MlpModel::init(7, 9, 4, seed);
        let (_, g) = m.loss_and_grad(&xr, &yr);
        for i in 0..m.params.len() {
            let (mut a, mut b) = (m.clone(), m.clone());
            a.params[i] += FD_STEP;
            b.params[i] -= FD_STEP;
            let fd = (a.loss_and_grad(&xr, &yr).0 - b.loss_and_grad(&xr, &yr).0) / (2.0 * FD_STEP);
            let scale = g[i].abs().max(fd.abs());
            let err = if scale < 1e-6 { (g[i] - fd).abs() } else { (g[i] - fd).abs() / scale };
            worst = worst.max(err);
        }
    }
    worst
}

/// Held-out subset accuracy of the default classifier on rolled-up labels.
fn graph_subset_accuracy(graph: &Graph, table: &EmbeddingTable) -> Result<f64, String> {
    let data = Dataset::from_table(table, &derive_all(graph)).map_err(|e| e.to_string())?;
    let (_, rep) = train(&data, &TrainConfig::default()).map_err(|e| e.to_string())?;
    rep.test.map(|m| m.subset_accuracy).ok_or_else(|| "empty test split".into())
}

fn proxy_embedding(seed: u64) -> EmbeddingConfig {
    EmbeddingConfig {
        dim: 32,
        walk_length: 40,
        walks_per_node: 10,
        window: 5,
        epochs: 2,
        seed,
        ..EmbeddingConfig::default()
    }
}

fn proxy_graph() -> Graph {
    generate(&SyntheticConfig::default().scaled(0.05)).expect("synthetic graph builds").graph
}

fn classifier_numerics(cx: &Ctx) -> Outcome {
    let worst = worst_gradient_error();
    let data = separable(500, 8, 1);
    let held = separable(300, 8, 2);
    let cfg = TrainConfig {
        epochs: 150,
        adam: AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        },
        ..TrainConfig::default()
    };
    let (model, _) = fit(&data, &cfg, 7).expect("fit");
    let f1 = evaluate(&model, &held, 0.5).expect("evaluate").micro.f1.unwrap_or(0.0);
    let verified = worst <= FD_REL_TOL && f1 >= SEPARABLE_MICRO_F1;
    let head = format!(
        "gradient max rel error {worst:.2e} over 20 inits (tol {FD_REL_TOL:.0e}); separable micro-F1 {f1:.4}"
    );
    match cx.published() {
        Some(p) => {
            let t = Instant::now();
            let table = match std::env::var_os("MSKG_NODE2VEC") {
                Some(path) => EmbeddingTable::load(&PathBuf::from(path), Method::Node2Vec).map_err(|e| e.to_string()),
                None => embed_graph(&p.graph, Method::Node2Vec, &EmbeddingConfig::default()).map_err(|e| e.to_string()),
            };
            let acc = table.and_then(|t| graph_subset_accuracy(&p.graph, &t));
            let elapsed = t.elapsed();
            match acc {
                Ok(a) => combine(
                    verified,
                    Some(a >= DATASET_SUBSET_ACCURACY && elapsed <= CLASSIFIER_BUDGET),
                    format!(
                        "{head}; dataset held-out subset accuracy {a:.4} (need {DATASET_SUBSET_ACCURACY}) in {:.0}s",
                        elapsed.as_secs_f64()
                    ),
                ),
                Err(e) => combine(verified, Some(false), format!("{head}; dataset run failed: {e}")),
            }
        }
        None => {
            let g = proxy_graph();
            let proxy = embed_graph(&g, Method::Node2Vec, &proxy_embedding(42))
                .map_err(|e| e.to_string())
                .and_then(|t| graph_subset_accuracy(&g, &t));
            let note = match proxy {
                Ok(a) => format!("synthetic stand-in subset accuracy {a:.4}"),
                Err(e) => format!("synthetic stand-in failed: {e}"),
            };
            combine(verified, None, format!("{head}; MSKG_DATASET unset; {note}"))
        }
    }
}

// ---------------------------------------------------------------- embeddings

fn barbell() -> Projection {
    let mut edges = Vec::new();
    for side in 0..2 {
        for i in 0..10 {
            for j in (i + 1)..10 {
                edges.push((side * 10 + i, side * 10 + j, 1.0));
            }
        }
    }
    edges.push((9, 10, 1.0));
    let labels = (0..20)
        .map(|i| if i % 2 == 0 { NodeLabel::Manufacturer } else { NodeLabel::Service })
        .collect();
    Projection::from_edges((0..20).map(|i| format!("n{i}")).collect(), labels, &edges)
}

fn clique_cfg(seed: u64) -> EmbeddingConfig {
    let mut c = EmbeddingConfig {
        dim: 16,
        walk_length: 20,
        walks_per_node: 10,
        window: 4,
        epochs: 3,
        seed,
        ..EmbeddingConfig::default()
    };
    // twenty nodes cannot supply twenty distinct shared negatives
    c.sage.negatives = 2;
    c.sage.epochs = 20;
    c.sage.hidden = 32;
    c.sage.batch_size = 64;
    c.sage.learning_rate = 0.02;
    c
}

fn separation(t: &EmbeddingTable) -> f64 {
    let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0, 0.0, 0);
    for a in 0..20 {
        for b in (a + 1)..20 {
            let c = cosine(t.row(a), t.row(b));
            if (a < 10) == (b < 10) {
                intra += c;
                ni += 1;
            } else {
                inter += c;
                nx += 1;
            }
        }
    }
    intra / ni as f64 - inter / nx as f64
}

fn walk_deviation() -> f64 {
    let edges = [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0), (1, 3, 1.5)];
    let p = Projection::from_edges((0..4).map(|i| format!("n{i}")).collect(), vec![NodeLabel::Service; 4], &edges);
    let (pp, qq) = (0.5, 2.0);
    let cfg = EmbeddingConfig {
        p: pp,
        q: qq,
        walk_length: 3,
        walks_per_node: WALKS,
        seed: 9,
        ..EmbeddingConfig::default()
    };
    let corpus = generate_walks(&p, &cfg).expect("walks");
    let mut worst: f64 = 0.0;
    // first step from 0 is weight-proportional: 1 with 1/4, 2 with 3/4
    let from0: Vec<_> = corpus.walks.iter().filter(|w| w[0] == 0).collect();
    let to1 = from0.iter().filter(|w| w[1] == 1).count() as f64 / from0.len() as f64;
    worst = worst.max((to1 - 0.25).abs());
    // from 1 having arrived from 0: back (w/p), common neighbour 2 (w), outward 3 (w/q)
    let mut counts = [0usize; 4];
    for w in corpus.walks.iter().filter(|w| w[0] == 0 && w[1] == 1) {
        counts[w[2] as usize] += 1;
    }
    let total: usize = counts.iter().sum();
    let un = [1.0 / pp, 0.0, 2.0, 1.5 / qq];
    let z: f64 = un.iter().sum();
    for x in [0, 2, 3] {
        worst = worst.max((counts[x] as f64 / total as f64 - un[x] / z).abs());
    }
    worst
}

fn embedding_structure(_: &Ctx) -> Outcome {
    let p = barbell();
    let mut n2v = Vec::new();
    let mut sage = Vec::new();
    for seed in 0..5 {
        n2v.push(separation(&train_node2vec(&p, &clique_cfg(seed)).expect("node2vec").0));
        sage.push(separation(&train_graphsage(&p, &clique_cfg(seed)).expect("graphsage").0));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let dev = walk_deviation();
    outcome(
        mean(&n2v) >= CLIQUE_SEPARATION && mean(&sage) >= CLIQUE_SEPARATION && dev <= WALK_TOL,
        format!(
            "mean intra-inter cosine over 5 seeds: node2vec {:.3}, graphsage {:.3} (need {CLIQUE_SEPARATION}); \
             walk transition max deviation {dev:.4} over {WALKS} walks per node (tol {WALK_TOL})",
            mean(&n2v),
            mean(&sage)
        ),
    )
}

// ---------------------------------------------------------------- clustering

fn silhouettes(graph: &Graph, cfg_for: impl Fn(u64) -> EmbeddingConfig) -> Result<Vec<(f64, f64)>, String> {
    let ids: Vec<&str> = graph.nodes_with_label(NodeLabel::Manufacturer).map(|n| n.id.as_str()).collect();
    let mut out = Vec::new();
    for seed in 0..3 {
        let cfg = cfg_for(seed);
        let mut pair = [0.0; 2];
        for (slot, method) in [Method::GraphSage, Method::Node2Vec].into_iter().enumerate() {
            let t = embed_graph(graph, method, &cfg).map_err(|e| e.to_string())?;
            let (_, pts) = t.rows_for(ids.iter().copied());
            let km = kmeans(
                &pts,
                &ClusterConfig {
                    k: 4,
                    seed,
                    ..ClusterConfig::default()
                },
            )
            .map_err(|e| e.to_string())?;
            pair[slot] = silhouette_sampled(&pts, &km.assignment, 2000, seed).map_err(|e| e.to_string())?;
        }
        out.push((pair[0], pair[1]));
    }
    Ok(out)
}

fn fmt_pairs(v: &[(f64, f64)]) -> String {
    v.iter()
        .map(|(s, n)| format!("{s:.3}/{n:.3}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn clustering_direction(cx: &Ctx) -> Outcome {
    match cx.published() {
        Some(p) => match silhouettes(&p.graph, |seed| EmbeddingConfig {
            seed,
            ..EmbeddingConfig::default()
        }) {
            Ok(v) => {
                let ok = v.iter().all(|(s, n)| s >= n);
                Outcome {
                    status: if ok { Status::SoftPass } else { Status::SoftFail },
                    detail: format!("k=4 silhouette graphsage/node2vec per seed: {}", fmt_pairs(&v)),
                }
            }
            Err(e) => Outcome {
                status: Status::SoftFail,
                detail: format!("dataset run failed: {e}"),
            },
        },
        None => {
            let note = match silhouettes(&proxy_graph(), proxy_embedding) {
                Ok(v) => format!("synthetic stand-in graphsage/node2vec per seed: {}", fmt_pairs(&v)),
                Err(e) => format!("synthetic stand-in failed: {e}"),
            };
            Outcome {
                status: Status::Unverified,
                detail: format!("MSKG_DATASET unset; {note}"),
            }
        }
    }
}

// ---------------------------------------------------------------- recommendation

fn recommendation_quality(_: &Ctx) -> Outcome {
    let g = proxy_graph();
    let bench = BenchmarkConfig::default();
    let mut parts = Vec::new();
    let mut ok = true;
    for method in [Method::Node2Vec, Method::GraphSage] {
        let t = embed_graph(&g, method, &proxy_embedding(42)).expect("embeddings");
        let rep = run_benchmark(&g, &t, &bench).expect("benchmark");
        let i = rep.ns.iter().position(|&n| n == 10).expect("P@10 measured");
        let lift = rep.lift(10).unwrap_or(f64::INFINITY);
        if method == Method::Node2Vec {
            ok = rep.targets.len() == bench.targets && lift >= LIFT_AT_10;
        }
        parts.push(format!(
            "{method} P@10 {:.3} vs shuffled {:.3} (x{lift:.2})",
            rep.recommender[i], rep.baseline[i]
        ));
    }
    outcome(
        ok,
        format!(
            "synthetic graph, {} targets with <= {} services, {} shuffles: {}; need x{LIFT_AT_10} for the default method",
            bench.targets,
            bench.max_services,
            bench.shuffles,
            parts.join("; ")
        ),
    )
}

// ---------------------------------------------------------------- extraction

fn extraction_fixture(_: &Ctx) -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/corpus");
    let corpus = load_corpus(&dir).expect("fixture corpus");
    let lx = Lexicon::builtin();
    let clf = LexicalClassifier::new(&lx);
    let cfg = ExtractionConfig::default().with_cutoffs(0.40, 0.25, 0.40);
    let raw = extract_corpus(&corpus, &lx, &clf, None, &cfg).expect("extraction");
    let rep = evaluate_extraction(&raw, &corpus.gold, &cfg).expect("evaluation");
    let p = rep.overall.rates.precision.unwrap_or(0.0);
    let r = rep.overall.rates.recall.unwrap_or(0.0);
    let mut monotone = true;
    let (mut last_tp, mut last_pos) = (u64::MAX, u64::MAX);
    for step in 0..=20 {
        let c = step as f64 / 20.0;
        let k = evaluate_extraction(&raw, &corpus.gold, &cfg.clone().with_cutoffs(c, c, c))
            .expect("evaluation")
            .overall
            .counts;
        monotone &= k.tp <= last_tp && k.tp + k.fp <= last_pos;
        last_tp = k.tp;
        last_pos = k.tp + k.fp;
    }
    outcome(
        corpus.documents.len() == 20 && p >= EXTRACTION_PRECISION && r >= EXTRACTION_RECALL && monotone,
        format!(
            "{} documents, {} gold pairs: precision {p:.4} recall {r:.4} at cutoffs (0.40, 0.25, 0.40); \
             21-step sweep monotone: {monotone}",
            corpus.documents.len(),
            corpus.gold.len()
        ),
    )
}

// ---------------------------------------------------------------- query

fn query_soundness(_: &Ctx) -> Outcome {
    let mut r = brute::seeded(2024);
    let (mut mismatches, mut nonempty, mut nondeterministic) = (0, 0, 0);
    for _ in 0..QUERY_CASES {
        let g = brute::random_graph(&mut r, 12);
        let text = brute::random_query(&mut r, g.node_count());
        let q = match parse(&text) {
            Ok(q) => q,
            Err(_) => {
                mismatches += 1;
                continue;
            }
        };
        let got = execute(&q, &g);
        match got {
            Ok(t) => {
                if t != brute::brute(&q, &g) {
                    mismatches += 1;
                }
                if !t.rows.is_empty() {
                    nonempty += 1;
                }
                if execute(&q, &g).map(|u| u.to_json()) != Ok(t.to_json()) {
                    nondeterministic += 1;
                }
            }
            Err(_) => mismatches += 1,
        }
    }
    // the reference questions as well
    let ctx = QaContext::new(sample_graph());
    for q in [Q4, Q5, Q6, Q7, Q8, Q11] {
        let a = ctx.answer(q).map(|b| serde_json::to_string(&b).unwrap());
        let b = ctx.answer(q).map(|b| serde_json::to_string(&b).unwrap());
        if a.is_err() || a.ok() != b.ok() {
            nondeterministic += 1;
        }
    }
    outcome(
        mismatches == 0 && nondeterministic == 0,
        format!(
            "{QUERY_CASES} random cases (<= 12 nodes): {mismatches} differ from exhaustive enumeration, \
             {nonempty} non-empty; {nondeterministic} non-identical repeats across cases and fixtures"
        ),
    )
}

// ---------------------------------------------------------------- service

fn snapshot_graph(extra: bool) -> Graph {
    let mut g = mskg_core::vocab::base_graph().expect("vocabulary");
    let mut rows: Vec<(&str, &str, &[&str], &[&str])> = SAMPLE.to_vec();
    if extra {
        rows.push(("m13.com", "Michigan", &["welding"], &[]));
    }
    for (m, loc, services, certs) in rows {
        let id = g.add_node(Node::new(NodeLabel::Manufacturer, m)).unwrap();
        g.add_edge(Edge::new(id.clone(), canonical_id(NodeLabel::Location, loc), RelationType::LocatedIn, 1.0))
            .unwrap();
        for s in services {
            g.add_edge(Edge::new(id.clone(), canonical_id(NodeLabel::Service, s), RelationType::Provides, 1.0))
                .unwrap();
        }
        for c in certs {
            g.add_edge(Edge::new(id.clone(), canonical_id(NodeLabel::Certification, c), RelationType::CertifiedWith, 1.0))
                .unwrap();
        }
    }
    g.freeze();
    g
}

fn service_concurrency(_: &Ctx) -> Outcome {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .expect("runtime");
    let snapshot = |extra| Snapshot::new(QaContext::new(snapshot_graph(extra)), if extra { "b" } else { "a" }, None);
    let svc = Arc::new(Service::with_snapshot(snapshot(false)).expect("valid snapshot"));
    // odd generations hold the sample graph, even ones the extended graph
    let expected = |generation: u64| if generation % 2 == 1 { (12u64, 2u64) } else { (13, 3) };
    let reloads = 40;
    let (responses, mixed, errors) = rt.block_on(async {
        let reloader = {
            let svc = svc.clone();
            tokio::task::spawn_blocking(move || {
                for i in 0..reloads {
                    svc.reload(snapshot(i % 2 == 0)).expect("valid snapshot");
                    std::thread::sleep(Duration::from_millis(2));
                }
            })
        };
        let mut tasks = Vec::new();
        for r in 0..READERS {
            let svc = svc.clone();
            tasks.push(tokio::spawn(async move {
                let (mut n, mut mixed, mut errors) = (0, 0, 0);
                for _ in 0..5 {
                    let req = if r % 2 == 0 {
                        Request::get("/graph/stats").body(Body::empty()).unwrap()
                    } else {
                        Request::post("/qa")
                            .header("content-type", "application/json")
                            .body(Body::from(serde_json::json!({ "question": Q5 }).to_string()))
                            .unwrap()
                    };
                    let res = router(svc.clone()).oneshot(req).await.unwrap();
                    n += 1;
                    if res.status() != StatusCode::OK {
                        errors += 1;
                        continue;
                    }
                    let v: serde_json::Value =
                        serde_json::from_slice(&to_bytes(res.into_body(), usize::MAX).await.unwrap()).unwrap();
                    let (m, c) = expected(v["generation"].as_u64().unwrap_or(0));
                    let consistent = if r % 2 == 0 {
                        v["labels"]["Manufacturer"].as_u64() == Some(m)
                    } else {
                        v["rows"] == serde_json::json!([[c]])
                    };
                    if !consistent {
                        mixed += 1;
                    }
                }
                (n, mixed, errors)
            }));
        }
        let mut totals = (0, 0, 0);
        for t in tasks {
            let (n, m, e) = t.await.unwrap();
            totals = (totals.0 + n, totals.1 + m, totals.2 + e);
        }
        reloader.await.unwrap();
        totals
    });
    let final_gen = svc.current().map_or(0, |l| l.generation);
    outcome(
        mixed == 0 && errors == 0 && final_gen == reloads as u64 + 1,
        format!(
            "{READERS} concurrent readers, {responses} responses across {reloads} reloads: {mixed} mixed-state, \
             {errors} errors; final generation {final_gen}"
        ),
    )
}

// ---------------------------------------------------------------- driver

fn main() {
    let dataset_path = std::env::var_os("MSKG_DATASET").map(PathBuf::from);
    let published = dataset_path.as_ref().map(|p| {
        let t = Instant::now();
        load_dataset(p, None)
            .map(|(graph, report)| Published {
                graph,
                report,
                elapsed: t.elapsed(),
            })
            .map_err(|e| e.to_string())
    });
    let cx = Ctx {
        dataset_path,
        published,
    };

    let criteria: [(&str, fn(&Ctx) -> Outcome); 10] = [
        ("dataset-integrity", dataset_integrity),
        ("reference-queries", reference_queries),
        ("metric-oracles", metric_oracles),
        ("classifier-numerics", classifier_numerics),
        ("embedding-structure", embedding_structure),
        ("clustering-direction", clustering_direction),
        ("recommendation-quality", recommendation_quality),
        ("extraction-fixture", extraction_fixture),
        ("query-soundness", query_soundness),
        ("service-concurrency", service_concurrency),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let t = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(|| check(&cx))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome {
                status: Status::Fail,
                detail: format!("panicked: {msg}"),
            }
        });
        println!(
            "{} {name}: {} [{:.1}s]",
            o.status.label(),
            o.detail,
            t.elapsed().as_secs_f64()
        );
        if o.status == Status::Fail {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: no hard failures");
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        std::process::exit(1);
    }
}
