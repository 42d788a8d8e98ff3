use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mskg_core::embed::Method;

#[derive(Debug, Parser)]
#[command(name = "mskg", version, about = "Manufacturing service knowledge graph pipeline and QA shell")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Pipeline config file (TOML, one section per stage).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a config value; repeatable. Applied after the file.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    /// Cap on worker threads.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Write the machine-readable output to this file.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Graph and model artifacts shared by the read-side subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct Inputs {
    /// Graph record stream (falls back to `paths.dataset`).
    #[arg(long, value_name = "FILE")]
    pub graph: Option<PathBuf>,
    /// node2vec embedding table.
    #[arg(long, value_name = "FILE")]
    pub node2vec: Option<PathBuf>,
    /// GraphSAGE embedding table.
    #[arg(long, value_name = "FILE")]
    pub graphsage: Option<PathBuf>,
    /// Trained label classifier.
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a record stream and compare its counts with a manifest.
    Ingest {
        #[arg(long, value_name = "FILE")]
        dataset: Option<PathBuf>,
        /// Expected counts (TOML); defaults to the published release counts.
        #[arg(long, value_name = "FILE")]
        manifest: Option<PathBuf>,
    },
    /// Extract relations from a page corpus and merge them into a graph.
    Extract {
        /// Directory of `<manufacturer>.txt` pages, optionally with gold.tsv.
        #[arg(long, value_name = "DIR")]
        corpus: Option<PathBuf>,
        /// Graph to merge into; the bare vocabulary when omitted.
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
        /// Zero-shot label classifier endpoint; lexical scoring is the fallback.
        #[arg(long, value_name = "URL")]
        classifier_url: Option<String>,
    },
    /// Learn node embeddings over the manufacturer/service projection.
    Embed {
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
        #[arg(long, default_value = "node2vec")]
        method: Method,
        /// Also write 2-D t-SNE coordinates of the manufacturer rows.
        #[arg(long, value_name = "FILE")]
        coords: Option<PathBuf>,
    },
    /// Train the multi-label capability classifier on embeddings.
    Train {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value = "node2vec")]
        method: Method,
    },
    /// Run one MSQL query.
    Query {
        msql: String,
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
    },
    /// Answer one question, or start an interactive shell when none is given.
    Qa {
        question: Option<String>,
        #[command(flatten)]
        inputs: Inputs,
        /// Language model endpoint for questions no template covers.
        #[arg(long, value_name = "URL")]
        lm_url: Option<String>,
    },
    /// Rank manufacturers by embedding similarity to one manufacturer.
    Recommend {
        id: String,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Leave the target out of the ranking.
        #[arg(long)]
        exclude_self: bool,
    },
    /// Score extraction, recommendation or classification.
    Evaluate {
        #[command(subcommand)]
        target: EvalTarget,
    },
    /// Serve the HTTP API; SIGHUP reloads the snapshot.
    Serve {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_name = "ADDR")]
        listen: Option<String>,
        #[arg(long, value_name = "URL")]
        lm_url: Option<String>,
    },
    /// Write a graph as records, an edge table or a node table.
    Export {
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
        /// records | edges | nodes
        #[arg(long, default_value = "records")]
        format: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum EvalTarget {
    /// Precision, recall and curve areas against the corpus gold pairs.
    Extraction {
        #[arg(long, value_name = "DIR")]
        corpus: Option<PathBuf>,
        #[arg(long, value_name = "URL")]
        classifier_url: Option<String>,
    },
    /// P@N and MRR of sampled targets against shuffled rankings.
    Recommendation {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value = "node2vec")]
        method: Method,
        #[arg(long, default_value_t = 20)]
        targets: usize,
        #[arg(long, default_value_t = 3)]
        max_services: usize,
        #[arg(long, default_value_t = 100)]
        shuffles: usize,
    },
    /// Repeated k-fold cross-validation of the classifier.
    Classifier {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value = "node2vec")]
        method: Method,
    },
}
