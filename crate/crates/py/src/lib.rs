//! Python bindings. Results with structure (tables, reports, answers) come
//! back as plain dicts and lists.

use std::path::PathBuf;

use mskg_core::classify::{derive_all, train, Dataset, MlpModel, TrainConfig};
use mskg_core::embed::{embed_graph, EmbeddingConfig, EmbeddingTable, Method};
use mskg_core::extract::{
    evaluate_extraction, extract_corpus, load_corpus, ExtractionConfig, LexicalClassifier, Lexicon,
};
use mskg_core::ingest::{export_graph, load_dataset, validate_manifest, ExportFormat, Manifest};
use mskg_core::metrics::{mean_reciprocal_rank, roc_pr};
use mskg_core::qa::{self, QaContext};
use mskg_core::query;
use mskg_core::synthetic::{generate, sample_graph, SyntheticConfig};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(mskg, MskgError, PyValueError);

fn err(e: impl std::fmt::Display) -> PyErr {
    MskgError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn method(name: &str) -> PyResult<Method> {
    name.parse().map_err(err)
}

/// Frozen manufacturing service graph.
#[pyclass(module = "mskg", frozen)]
struct Graph {
    inner: mskg_core::Graph,
}

#[pymethods]
impl Graph {
    /// Load a JSON-lines record stream.
    #[staticmethod]
    fn load(py: Python<'_>, path: PathBuf) -> PyResult<Self> {
        let (inner, _) = py.detach(|| load_dataset(&path, None)).map_err(err)?;
        Ok(Graph { inner })
    }

    /// The twelve-manufacturer sample graph.
    #[staticmethod]
    fn sample() -> Self {
        Graph { inner: sample_graph() }
    }

    /// Random graph with the published per-manufacturer densities.
    #[staticmethod]
    #[pyo3(signature = (fraction = 1.0, seed = 42))]
    fn synthetic(py: Python<'_>, fraction: f64, seed: u64) -> PyResult<Self> {
        let cfg = SyntheticConfig {
            seed,
            ..SyntheticConfig::default().scaled(fraction)
        };
        let g = py.detach(|| generate(&cfg)).map_err(err)?;
        Ok(Graph { inner: g.graph })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn stats(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.stats())
    }

    /// Ids of all nodes with the given label.
    fn ids(&self, label: &str) -> PyResult<Vec<String>> {
        let label = label.parse().map_err(err)?;
        Ok(self.inner.nodes_with_label(label).map(|n| n.id.clone()).collect())
    }

    /// Per-label and per-relation counts against the published manifest.
    fn validate(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &validate_manifest(&self.inner, &Manifest::table3()))
    }

    /// `records`, `edges` or `nodes`.
    #[pyo3(signature = (format = "records"))]
    fn export(&self, format: &str) -> PyResult<String> {
        let f: ExportFormat = format.parse().map_err(err)?;
        String::from_utf8(export_graph(&self.inner, f)).map_err(err)
    }

    /// Run an MSQL query; returns `{"columns": [...], "rows": [[...]]}`.
    fn query(&self, py: Python<'_>, msql: &str) -> PyResult<Py<PyAny>> {
        let t = query::run(msql, &self.inner).map_err(err)?;
        to_py(py, &t)
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

/// Node embedding table.
#[pyclass(module = "mskg", frozen)]
struct Embeddings {
    inner: EmbeddingTable,
}

#[pymethods]
impl Embeddings {
    #[staticmethod]
    #[pyo3(signature = (graph, method = "node2vec", dim = 100, walk_length = 80, walks_per_node = 10, window = 10, epochs = 5, seed = 42))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        graph: &Graph,
        method: &str,
        dim: usize,
        walk_length: usize,
        walks_per_node: usize,
        window: usize,
        epochs: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let m = self::method(method)?;
        let cfg = EmbeddingConfig {
            dim,
            walk_length,
            walks_per_node,
            window,
            epochs,
            seed,
            ..EmbeddingConfig::default()
        };
        let inner = py.detach(|| embed_graph(&graph.inner, m, &cfg)).map_err(err)?;
        Ok(Embeddings { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, method = "node2vec"))]
    fn load(path: PathBuf, method: &str) -> PyResult<Self> {
        let inner = EmbeddingTable::load(&path, self::method(method)?).map_err(err)?;
        Ok(Embeddings { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path, None).map_err(err)
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.as_str()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().to_vec()
    }

    fn get(&self, id: &str) -> Option<Vec<f64>> {
        self.inner.get(id).map(<[f64]>::to_vec)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, id: &str) -> bool {
        self.inner.position(id).is_some()
    }
}

/// Multi-label capability classifier.
#[pyclass(module = "mskg", frozen)]
struct Classifier {
    inner: MlpModel,
}

#[pymethods]
impl Classifier {
    /// Fit on graph-derived labels; returns the model and its training report.
    #[staticmethod]
    #[pyo3(signature = (graph, embeddings, epochs = 100, seed = 42))]
    fn train(
        py: Python<'_>,
        graph: &Graph,
        embeddings: &Embeddings,
        epochs: usize,
        seed: u64,
    ) -> PyResult<(Self, Py<PyAny>)> {
        let cfg = TrainConfig {
            epochs,
            seed,
            ..TrainConfig::default()
        };
        let (inner, report) = py
            .detach(|| {
                let data = Dataset::from_table(&embeddings.inner, &derive_all(&graph.inner))?;
                train(&data, &cfg)
            })
            .map_err(err)?;
        Ok((Classifier { inner }, to_py(py, &report)?))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Classifier {
            inner: MlpModel::load(&path).map_err(err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    /// Per-label probabilities for one embedding row.
    fn probabilities(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.probabilities(&x).map_err(err)
    }
}

/// Question answering over a graph and optional embeddings and classifier.
#[pyclass(module = "mskg", frozen)]
struct Engine {
    inner: QaContext,
}

#[pymethods]
impl Engine {
    #[new]
    #[pyo3(signature = (graph, node2vec = None, graphsage = None, classifier = None))]
    fn new(
        graph: &Graph,
        node2vec: Option<&Embeddings>,
        graphsage: Option<&Embeddings>,
        classifier: Option<&Classifier>,
    ) -> Self {
        let mut inner = QaContext::new(graph.inner.clone());
        inner.node2vec = node2vec.map(|e| e.inner.clone());
        inner.graphsage = graphsage.map(|e| e.inner.clone());
        inner.model = classifier.map(|c| c.inner.clone());
        Engine { inner }
    }

    /// Answer bundle: intent, query, table or ranking, summary, provenance.
    fn answer(&self, py: Python<'_>, question: &str) -> PyResult<Py<PyAny>> {
        let bundle = py.detach(|| self.inner.answer(question)).map_err(err)?;
        to_py(py, &bundle)
    }

    /// `[(id, similarity), ...]` by descending cosine similarity.
    #[pyo3(signature = (id, k = 10, method = "node2vec", include_self = true))]
    fn recommend(&self, id: &str, k: usize, method: &str, include_self: bool) -> PyResult<Vec<(String, f64)>> {
        let table = self.inner.embeddings(self::method(method)?).map_err(err)?;
        let ranking = qa::recommend(&self.inner.graph, table, id, k, include_self).map_err(err)?;
        Ok(ranking.into_iter().map(|r| (r.id, r.similarity)).collect())
    }
}

/// Area under the ROC and precision-recall curves.
#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<(f64, f64)> {
    if scores.len() != labels.len() {
        return Err(err("scores and labels differ in length"));
    }
    let pairs: Vec<(f64, bool)> = scores.into_iter().zip(labels).collect();
    let c = roc_pr(&pairs).map_err(err)?;
    Ok((c.auc_roc, c.auc_pr))
}

/// Mean reciprocal rank over per-query relevance lists.
#[pyfunction]
fn mrr(queries: Vec<Vec<bool>>) -> PyResult<f64> {
    Ok(mean_reciprocal_rank(&queries).map_err(err)?.mrr)
}

/// Extract relations from a page directory and score them against its gold pairs.
#[pyfunction]
fn evaluate_corpus(py: Python<'_>, corpus: PathBuf) -> PyResult<Py<PyAny>> {
    let report = py
        .detach(|| -> Result<_, String> {
            let c = load_corpus(&corpus).map_err(|e| e.to_string())?;
            let lx = Lexicon::builtin();
            let clf = LexicalClassifier::new(&lx);
            let cfg = ExtractionConfig::default();
            let raw = extract_corpus(&c, &lx, &clf, None, &cfg).map_err(|e| e.to_string())?;
            evaluate_extraction(&raw, &c.gold, &cfg).map_err(|e| e.to_string())
        })
        .map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
fn mskg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MskgError", m.py().get_type::<MskgError>())?;
    m.add_class::<Graph>()?;
    m.add_class::<Embeddings>()?;
    m.add_class::<Classifier>()?;
    m.add_class::<Engine>()?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(mrr, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_corpus, m)?)?;
    Ok(())
}
