//! Manufacturing service knowledge graph engine.
//!
//! The crate builds a typed, weighted graph of manufacturers and the services,
//! certifications and locations attached to them, learns node embeddings over
//! the manufacturer/service projection, and answers sourcing questions either
//! with graph queries (MSQL) or with embedding similarity.
//!
//! Module map:
//! - [`graph`]: the property-graph model, schema checks and service rollup.
//! - [`ingest`]: record-stream loading, manifests and export.
//! - [`extract`]: key-term filtration and label classification of site text.
//! - [`embed`]: walks, skip-gram, GraphSAGE, t-SNE and clustering.
//! - [`classify`]: the multi-label capability classifier.
//! - [`metrics`]: classification rates, ROC/PR, P@N and MRR.
//! - [`query`]: the MSQL parser and evaluator.
//! - [`qa`]: question routing, translation, recommendation and answers.

pub mod classify;
pub mod config;
pub mod embed;
pub mod extract;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod optim;
pub mod qa;
pub mod query;
pub mod synthetic;
pub mod vocab;

mod http;
mod rng;

pub use graph::{Category, Edge, Graph, GraphError, Node, NodeLabel, RelationType};
