use std::io::{BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use mskg_core::classify::{cross_validate, derive_all, train, ClassifyError, Dataset};
use mskg_core::config::{ConfigError, PipelineConfig};
use mskg_core::embed::{coords_to_tsv, embed_graph, reduce_tsne, EmbedError, EmbeddingTable, Method};
use mskg_core::extract::{
    apply_cutoffs, evaluate_extraction, extract_corpus, load_corpus, merge_into_graph, ClassifierPort, ExtractError,
    ExtractionReport, HttpClassifier, LexicalClassifier, Lexicon,
};
use mskg_core::graph::{Category, Graph, GraphError, NodeLabel};
use mskg_core::ingest::{export_graph, load_dataset, validate_manifest, ExportFormat, IngestError, LoadReport, Manifest};
use mskg_core::qa::{recommend, run_benchmark, AnswerBundle, BenchmarkConfig, QaContext, QaError};
use mskg_core::query::{self, QueryError};
use mskg_serve::{ServeError, Snapshot};
use serde::Serialize;
use thiserror::Error;

use crate::args::{Cli, Command, EvalTarget, Inputs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Qa(#[from] QaError),
    #[error(transparent)]
    Serve(#[from] ServeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(ConfigError::BadOverride(_)) => 2,
            _ => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    // a closed pipe (`| head`) is not an error worth reporting
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("serializes");
    bytes.push(b'\n');
    bytes
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

struct Cx {
    cfg: PipelineConfig,
    out: Option<PathBuf>,
}

impl Cx {
    /// Writes `bytes` to `--out` when given; reports whether it did.
    fn write_out(&self, bytes: &[u8]) -> Result<bool, CliError> {
        match &self.out {
            Some(p) => {
                std::fs::write(p, bytes).map_err(|source| CliError::Io { path: p.clone(), source })?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn graph_path(&self) -> Result<&Path, CliError> {
        self.cfg
            .serve
            .graph
            .as_deref()
            .or(self.cfg.paths.dataset.as_deref())
            .ok_or_else(|| usage("no graph given; pass --graph or set paths.dataset"))
    }

    fn load_graph(&self) -> Result<(Graph, LoadReport), CliError> {
        read_graph(self.graph_path()?)
    }

    fn table(&self, method: Method) -> Result<EmbeddingTable, CliError> {
        let p = match method {
            Method::Node2Vec => &self.cfg.serve.node2vec,
            Method::GraphSage => &self.cfg.serve.graphsage,
        };
        let p = p
            .as_deref()
            .ok_or_else(|| usage(format!("no {method} embeddings given; pass --{method}")))?;
        Ok(EmbeddingTable::load(p, method)?)
    }

    fn qa_context(&self) -> Result<QaContext, CliError> {
        let mut serve = self.cfg.serve.clone();
        serve.graph = Some(self.graph_path()?.to_path_buf());
        Ok(Snapshot::load(&serve)?.ctx)
    }

    fn classifier(&self, url: Option<&str>) -> Box<dyn ClassifierPort> {
        let s = &self.cfg.serve;
        match url {
            Some(u) => Box::new(HttpClassifier::new(
                u,
                Duration::from_millis(s.timeout_ms),
                s.max_retries,
                s.max_in_flight,
            )),
            None => Box::new(LexicalClassifier::new(&Lexicon::builtin())),
        }
    }
}

fn read_graph(path: &Path) -> Result<(Graph, LoadReport), CliError> {
    match load_dataset(path, None) {
        Err(IngestError::Io(source)) => Err(CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        r => Ok(r?),
    }
}

fn apply_inputs(cfg: &mut PipelineConfig, i: &Inputs) {
    if let Some(p) = &i.graph {
        cfg.serve.graph = Some(p.clone());
    }
    if let Some(p) = &i.node2vec {
        cfg.serve.node2vec = Some(p.clone());
    }
    if let Some(p) = &i.graphsage {
        cfg.serve.graphsage = Some(p.clone());
    }
    if let Some(p) = &i.model {
        cfg.serve.model = Some(p.clone());
    }
}

/// Subcommand flags sit between `--set` and the environment.
fn apply_flags(cfg: &mut PipelineConfig, cmd: &Command) {
    let graph_only = |cfg: &mut PipelineConfig, g: &Option<PathBuf>| {
        apply_inputs(
            cfg,
            &Inputs {
                graph: g.clone(),
                ..Inputs::default()
            },
        )
    };
    match cmd {
        Command::Ingest { dataset, manifest } => {
            if let Some(p) = dataset {
                cfg.paths.dataset = Some(p.clone());
            }
            if let Some(p) = manifest {
                cfg.paths.manifest = Some(p.clone());
            }
        }
        Command::Extract { corpus, .. } | Command::Evaluate { target: EvalTarget::Extraction { corpus, .. } } => {
            if let Some(p) = corpus {
                cfg.paths.corpus = Some(p.clone());
            }
        }
        Command::Embed { graph, .. } | Command::Query { graph, .. } | Command::Export { graph, .. } => {
            graph_only(cfg, graph)
        }
        Command::Train { inputs, .. }
        | Command::Recommend { inputs, .. }
        | Command::Evaluate {
            target: EvalTarget::Recommendation { inputs, .. } | EvalTarget::Classifier { inputs, .. },
        } => apply_inputs(cfg, inputs),
        Command::Qa { inputs, lm_url, .. } => {
            apply_inputs(cfg, inputs);
            if let Some(u) = lm_url {
                cfg.serve.language_model_url = Some(u.clone());
            }
        }
        Command::Serve { inputs, listen, lm_url } => {
            apply_inputs(cfg, inputs);
            if let Some(l) = listen {
                cfg.serve.listen = l.clone();
            }
            if let Some(u) = lm_url {
                cfg.serve.language_model_url = Some(u.clone());
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let Cli { global, command } = cli;
    let base = match &global.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let mut cfg = base.with_overrides(&global.set)?;
    if let Some(n) = global.threads {
        cfg.threads = Some(n);
    }
    apply_flags(&mut cfg, &command);
    let cfg = cfg.with_process_env()?;
    cfg.check_paths()?;
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    let cx = Cx { cfg, out: global.out };
    match command {
        Command::Ingest { .. } => ingest(&cx),
        Command::Extract { graph, classifier_url, .. } => extract(&cx, graph.as_deref(), classifier_url.as_deref()),
        Command::Embed { method, coords, .. } => embed(&cx, method, coords.as_deref()),
        Command::Train { method, .. } => train_cmd(&cx, method),
        Command::Query { msql, .. } => query_cmd(&cx, &msql),
        Command::Qa { question, .. } => qa(&cx, question.as_deref()),
        Command::Recommend {
            id,
            method,
            k,
            exclude_self,
            ..
        } => recommend_cmd(&cx, &id, method, k, !exclude_self),
        Command::Evaluate { target } => match target {
            EvalTarget::Extraction { classifier_url, .. } => evaluate_extraction_cmd(&cx, classifier_url.as_deref()),
            EvalTarget::Recommendation {
                method,
                targets,
                max_services,
                shuffles,
                ..
            } => evaluate_recommendation_cmd(
                &cx,
                method,
                BenchmarkConfig {
                    targets,
                    max_services,
                    shuffles,
                    seed: cx.cfg.seed,
                    ..BenchmarkConfig::default()
                },
            ),
            EvalTarget::Classifier { method, .. } => evaluate_classifier_cmd(&cx, method),
        },
        Command::Serve { .. } => serve(&cx),
        Command::Export { format, .. } => export(&cx, &format),
    }
}

#[derive(Serialize)]
struct IngestOutput<'a> {
    load: &'a LoadReport,
    manifest: &'a mskg_core::ingest::ManifestReport,
    clean: bool,
}

fn ingest(cx: &Cx) -> Result<(), CliError> {
    let dataset = cx
        .cfg
        .paths
        .dataset
        .as_deref()
        .ok_or_else(|| usage("no dataset given; pass --dataset or set paths.dataset"))?;
    let manifest = match &cx.cfg.paths.manifest {
        Some(p) => Manifest::load(p)?,
        None => Manifest::table3(),
    };
    let (graph, load) = read_graph(dataset)?;
    let report = validate_manifest(&graph, &manifest);
    emit(&format!(
        "loaded {} records: {} nodes, {} relationships (merged {}, duplicate {}, default weight {})\nsha256 {}\n{report}",
        load.lines,
        load.nodes,
        load.relationships,
        load.merged_nodes,
        load.duplicate_relationships,
        load.defaulted_weights,
        load.sha256,
    ));
    cx.write_out(&json(&IngestOutput {
        load: &load,
        manifest: &report,
        clean: report.is_clean(),
    }))?;
    if report.is_clean() {
        Ok(())
    } else {
        Err(CliError::Failed("counts differ from the manifest".into()))
    }
}

fn print_extraction(report: &ExtractionReport) -> String {
    let mut s = String::from("entity\tpairs\ttp\tfp\tfn\tprecision\trecall\tf1\tauc_roc\tauc_pr\n");
    for t in report.per_type.iter().chain(std::iter::once(&report.overall)) {
        let c = t.counts;
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            t.entity.map_or("all", |e| e.as_str()),
            t.pairs,
            c.tp,
            c.fp,
            c.fn_,
            fmt_opt(t.rates.precision),
            fmt_opt(t.rates.recall),
            fmt_opt(t.rates.f1),
            fmt_opt(t.curves.as_ref().map(|c| c.auc_roc)),
            fmt_opt(t.curves.as_ref().map(|c| c.auc_pr)),
        ));
    }
    s
}

fn corpus_dir(cx: &Cx) -> Result<&Path, CliError> {
    cx.cfg
        .paths
        .corpus
        .as_deref()
        .ok_or_else(|| usage("no corpus given; pass --corpus or set paths.corpus"))
}

fn extract(cx: &Cx, base: Option<&Path>, classifier_url: Option<&str>) -> Result<(), CliError> {
    let corpus = load_corpus(corpus_dir(cx)?)?;
    let mut graph = match base {
        Some(p) => read_graph(p)?.0.editable_copy(),
        None => mskg_core::vocab::base_graph()?,
    };
    let lexicon = if base.is_some() { Lexicon::from_graph(&graph)? } else { Lexicon::builtin() };
    let fallback = LexicalClassifier::new(&lexicon);
    let primary = cx.classifier(classifier_url);
    let fallback: Option<&dyn ClassifierPort> = classifier_url.is_some().then_some(&fallback as &dyn ClassifierPort);
    let raw = extract_corpus(&corpus, &lexicon, primary.as_ref(), fallback, &cx.cfg.extraction)?;
    let kept = apply_cutoffs(&raw, &cx.cfg.extraction);
    let added = merge_into_graph(&mut graph, &kept)?;
    graph.freeze();
    eprintln!(
        "{} documents, {} scored relations, {} kept, {} edges added",
        corpus.documents.len(),
        raw.len(),
        kept.len(),
        added
    );
    if !corpus.gold.is_empty() {
        let report = evaluate_extraction(&raw, &corpus.gold, &cx.cfg.extraction)?;
        eprint!("{}", print_extraction(&report));
    }
    let records = export_graph(&graph, ExportFormat::CanonicalRecords);
    if !cx.write_out(&records)? {
        emit(&String::from_utf8_lossy(&records));
    }
    Ok(())
}

fn embed(cx: &Cx, method: Method, coords: Option<&Path>) -> Result<(), CliError> {
    let (graph, _) = cx.load_graph()?;
    let cfg = &cx.cfg.embedding;
    let table = embed_graph(&graph, method, cfg)?;
    eprintln!("{method}: {} rows, dim {}, seed {}", table.len(), table.dim, cfg.seed);
    match &cx.out {
        Some(p) => table.save(p, Some(cfg.seed))?,
        None => emit(&table.to_tsv()),
    }
    if let Some(path) = coords {
        let manufacturers: Vec<&str> = graph.nodes_with_label(NodeLabel::Manufacturer).map(|n| n.id.as_str()).collect();
        let (ids, points) = table.rows_for(manufacturers);
        let result = reduce_tsne(&points, &cx.cfg.tsne)?;
        std::fs::write(path, coords_to_tsv(&ids, &result.coords)).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        eprintln!("t-SNE: {} points, final KL {:.4}", ids.len(), result.kl.last().copied().unwrap_or(0.0));
    }
    Ok(())
}

fn dataset(cx: &Cx, method: Method) -> Result<Dataset, CliError> {
    let (graph, _) = cx.load_graph()?;
    let table = cx.table(method)?;
    Ok(Dataset::from_table(&table, &derive_all(&graph))?)
}

fn train_cmd(cx: &Cx, method: Method) -> Result<(), CliError> {
    let data = dataset(cx, method)?;
    let (model, report) = train(&data, &cx.cfg.train)?;
    let score = |m: &Option<mskg_core::metrics::MultiLabelMetrics>| fmt_opt(m.as_ref().map(|m| m.subset_accuracy));
    eprintln!(
        "trained on {} of {} rows; subset accuracy train {:.4} validation {} test {}",
        report.sizes[0],
        data.len(),
        report.train.subset_accuracy,
        score(&report.validation),
        score(&report.test),
    );
    let bytes = model.to_json().into_bytes();
    if !cx.write_out(&bytes)? {
        emit(&String::from_utf8_lossy(&bytes));
        emit("\n");
    }
    Ok(())
}

fn query_cmd(cx: &Cx, msql: &str) -> Result<(), CliError> {
    let (graph, _) = cx.load_graph()?;
    let table = query::run(msql, &graph)?;
    emit(&table.to_string());
    cx.write_out(table.to_json().as_bytes())?;
    Ok(())
}

fn render_bundle(b: &AnswerBundle) -> String {
    let mut s = format!("{}\n", b.summary);
    if let Some(q) = &b.query {
        s.push_str(&format!("query: {q}\n"));
    }
    if let Some(t) = &b.table {
        s.push_str(&t.to_string());
    }
    if let Some(r) = &b.ranking {
        s.push_str("rank\tid\tsimilarity\n");
        for (i, e) in r.iter().enumerate() {
            s.push_str(&format!("{}\t{}\t{:.6}\n", i + 1, e.id, e.similarity));
        }
    }
    if let Some(t) = &b.tags {
        s.push_str("category\tprobability\tassigned\n");
        for c in Category::ALL {
            s.push_str(&format!(
                "{}\t{:.4}\t{}\n",
                c.name(),
                t.probabilities[c.index()],
                t.labels.0[c.index()]
            ));
        }
    }
    s
}

fn qa(cx: &Cx, question: Option<&str>) -> Result<(), CliError> {
    let ctx = cx.qa_context()?;
    if let Some(q) = question {
        let b = ctx.answer(q)?;
        emit(&render_bundle(&b));
        cx.write_out(&json(&b))?;
        return if b.intent.kind == mskg_core::qa::IntentKind::Unsupported {
            Err(CliError::Failed("unsupported question".into()))
        } else {
            Ok(())
        };
    }
    repl(cx, &ctx)
}

fn repl(cx: &Cx, ctx: &QaContext) -> Result<(), CliError> {
    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let mut log = Vec::new();
    let prompt = || {
        if interactive {
            eprint!("mskg> ");
        }
    };
    prompt();
    for line in stdin.lock().lines() {
        let line = line.map_err(|source| CliError::Io {
            path: PathBuf::from("<stdin>"),
            source,
        })?;
        let q = line.trim();
        if q == "exit" || q == "quit" {
            break;
        }
        if !q.is_empty() {
            match ctx.answer(q) {
                Ok(b) => {
                    emit(&render_bundle(&b));
                    let mut rec = serde_json::to_vec(&b).expect("serializes");
                    rec.push(b'\n');
                    log.extend(rec);
                }
                Err(e) => eprintln!("error: {e}"),
            }
        }
        prompt();
    }
    cx.write_out(&log)?;
    Ok(())
}

fn recommend_cmd(cx: &Cx, id: &str, method: Option<Method>, k: usize, include_self: bool) -> Result<(), CliError> {
    let ctx = cx.qa_context()?;
    let method = method.unwrap_or(ctx.default_method);
    let ranking = recommend(&ctx.graph, ctx.embeddings(method)?, id, k, include_self)?;
    let mut s = String::from("rank\tid\tsimilarity\n");
    for (i, r) in ranking.iter().enumerate() {
        s.push_str(&format!("{}\t{}\t{:.6}\n", i + 1, r.id, r.similarity));
    }
    emit(&s);
    cx.write_out(&json(&serde_json::json!({
        "target": id,
        "method": method,
        "k": k,
        "include_self": include_self,
        "ranking": ranking,
    })))?;
    Ok(())
}

fn evaluate_extraction_cmd(cx: &Cx, classifier_url: Option<&str>) -> Result<(), CliError> {
    let corpus = load_corpus(corpus_dir(cx)?)?;
    let lexicon = Lexicon::builtin();
    let fallback = LexicalClassifier::new(&lexicon);
    let primary = cx.classifier(classifier_url);
    let fallback: Option<&dyn ClassifierPort> = classifier_url.is_some().then_some(&fallback as &dyn ClassifierPort);
    let raw = extract_corpus(&corpus, &lexicon, primary.as_ref(), fallback, &cx.cfg.extraction)?;
    let report = evaluate_extraction(&raw, &corpus.gold, &cx.cfg.extraction)?;
    emit(&print_extraction(&report));
    cx.write_out(&json(&report))?;
    Ok(())
}

fn evaluate_recommendation_cmd(cx: &Cx, method: Method, bench: BenchmarkConfig) -> Result<(), CliError> {
    let (graph, _) = cx.load_graph()?;
    let table = cx.table(method)?;
    let rep = run_benchmark(&graph, &table, &bench)?;
    let mut s = format!("{method}: {} targets, {} shuffles\nn\trecommender\tbaseline\tlift\n", rep.targets.len(), bench.shuffles);
    for (i, n) in rep.ns.iter().enumerate() {
        s.push_str(&format!(
            "{n}\t{:.4}\t{:.4}\t{}\n",
            rep.recommender[i],
            rep.baseline[i],
            fmt_opt(rep.lift(*n))
        ));
    }
    s.push_str(&format!("mrr\t{:.4}\t{:.4}\n", rep.mrr, rep.baseline_mrr));
    emit(&s);
    cx.write_out(&json(&rep))?;
    Ok(())
}

fn evaluate_classifier_cmd(cx: &Cx, method: Method) -> Result<(), CliError> {
    let data = dataset(cx, method)?;
    let rep = cross_validate(&data, &cx.cfg.train)?;
    let mut s = format!("{} folds over {} rows\nmetric\tmean\tstd\n", rep.folds.len(), data.len());
    for (name, m) in [
        ("subset_accuracy", rep.subset_accuracy),
        ("label_accuracy", rep.label_accuracy),
        ("precision", rep.precision),
        ("recall", rep.recall),
        ("f1", rep.f1),
    ] {
        s.push_str(&format!("{name}\t{:.4}\t{:.4}\n", m.mean, m.std));
    }
    emit(&s);
    cx.write_out(&json(&rep))?;
    Ok(())
}

fn serve(cx: &Cx) -> Result<(), CliError> {
    let mut serve = cx.cfg.serve.clone();
    serve.graph = Some(cx.graph_path()?.to_path_buf());
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    rt.block_on(mskg_serve::run(serve))?;
    Ok(())
}

fn export(cx: &Cx, format: &str) -> Result<(), CliError> {
    let format: ExportFormat = format.parse().map_err(|e: IngestError| usage(e.to_string()))?;
    let (graph, _) = cx.load_graph()?;
    let bytes = export_graph(&graph, format);
    if !cx.write_out(&bytes)? {
        emit(&String::from_utf8_lossy(&bytes));
    }
    Ok(())
}
