//! Pipeline configuration: one TOML file with a section per stage.
//!
//! Precedence is file, then command-line `section.key=value` overrides, then
//! environment variables named `MSKG_<SECTION>__<KEY>` (or `MSKG_<KEY>` for
//! top-level keys).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::TrainConfig;
use crate::embed::{ClusterConfig, EmbeddingConfig, TsneConfig};
use crate::extract::ExtractionConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse: {0}")]
    Parse(String),
    #[error("bad override `{0}` (expected section.key=value)")]
    BadOverride(String),
    #[error("path for `{key}` does not exist: {path}")]
    MissingPath { key: &'static str, path: PathBuf },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub dataset: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServeConfig {
    pub listen: String,
    /// Graph snapshot (record stream) to serve.
    pub graph: Option<PathBuf>,
    pub node2vec: Option<PathBuf>,
    pub graphsage: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub language_model_url: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            listen: "127.0.0.1:8080".into(),
            graph: None,
            node2vec: None,
            graphsage: None,
            model: None,
            language_model_url: None,
            timeout_ms: 10_000,
            max_retries: 2,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    pub paths: Paths,
    pub extraction: ExtractionConfig,
    pub embedding: EmbeddingConfig,
    pub train: TrainConfig,
    pub cluster: ClusterConfig,
    pub tsne: TsneConfig,
    pub serve: ServeConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            threads: None,
            paths: Paths::default(),
            extraction: ExtractionConfig::default(),
            embedding: EmbeddingConfig::default(),
            train: TrainConfig::default(),
            cluster: ClusterConfig::default(),
            tsne: TsneConfig::default(),
            serve: ServeConfig::default(),
        }
    }
}

fn scalar(raw: &str) -> toml::Value {
    let t = raw.trim();
    if let Ok(i) = t.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = t.parse::<f64>() {
        return toml::Value::Float(f);
    }
    match t {
        "true" => toml::Value::Boolean(true),
        "false" => toml::Value::Boolean(false),
        _ => match toml::from_str::<toml::Table>(&format!("v = {t}")) {
            Ok(mut tbl) if t.starts_with('[') => tbl.remove("v").unwrap_or_else(|| toml::Value::String(t.into())),
            _ => toml::Value::String(t.to_string()),
        },
    }
}

fn set_path(root: &mut toml::Table, path: &[String], value: toml::Value) {
    let (last, parents) = path.split_last().expect("nonempty path");
    let mut cur = root;
    for p in parents {
        cur = cur
            .entry(p.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .expect("section is a table");
    }
    // a float field given an integer literal stays a float
    let value = match (cur.get(last), value) {
        (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (_, v) => v,
    };
    cur.insert(last.clone(), value);
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `section.key=value` assignments in order.
    pub fn with_overrides<S: AsRef<str>>(self, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut tbl: toml::Table = toml::Table::try_from(&self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::BadOverride(o.to_string()))?;
            let path: Vec<String> = k.trim().split('.').map(|s| s.to_ascii_lowercase()).collect();
            if path.iter().any(String::is_empty) {
                return Err(ConfigError::BadOverride(o.to_string()));
            }
            set_path(&mut tbl, &path, scalar(v));
        }
        tbl.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    /// Overrides taken from `MSKG_*` variables in the given environment.
    pub fn with_env<I: IntoIterator<Item = (String, String)>>(self, vars: I) -> Result<Self, ConfigError> {
        let mut overrides: Vec<String> = vars
            .into_iter()
            .filter_map(|(k, v)| {
                let rest = k.strip_prefix("MSKG_")?;
                if rest.is_empty() || rest == "DATASET" {
                    return None;
                }
                Some(format!("{}={v}", rest.to_ascii_lowercase().replace("__", ".")))
            })
            .collect();
        overrides.sort();
        self.with_overrides(&overrides)
    }

    pub fn with_process_env(self) -> Result<Self, ConfigError> {
        self.with_env(std::env::vars())
    }

    /// Every configured input path must exist.
    pub fn check_paths(&self) -> Result<(), ConfigError> {
        let inputs: [(&'static str, &Option<PathBuf>); 3] = [
            ("paths.dataset", &self.paths.dataset),
            ("paths.manifest", &self.paths.manifest),
            ("paths.corpus", &self.paths.corpus),
        ];
        for (key, p) in inputs {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(ConfigError::MissingPath { key, path: p.clone() });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_default() {
        let c = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(PipelineConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn precedence_file_flags_env() {
        let c = PipelineConfig::from_toml("[embedding]\ndim = 32\np = 2\n[serve]\nlisten = \"0.0.0.0:1\"").unwrap();
        assert_eq!(c.embedding.dim, 32);
        let c = c.with_overrides(&["embedding.dim=16", "train.adam.lr=0.01"]).unwrap();
        assert_eq!(c.embedding.dim, 16);
        assert_eq!(c.train.adam.lr, 0.01);
        let env = vec![
            ("MSKG_EMBEDDING__DIM".to_string(), "8".to_string()),
            ("MSKG_EMBEDDING__Q".to_string(), "3".to_string()),
            ("MSKG_SEED".to_string(), "7".to_string()),
            ("MSKG_DATASET".to_string(), "/nope".to_string()),
            ("HOME".to_string(), "/root".to_string()),
        ];
        let c = c.with_env(env).unwrap();
        assert_eq!(c.embedding.dim, 8);
        assert_eq!(c.embedding.q, 3.0);
        assert_eq!(c.embedding.p, 2.0);
        assert_eq!(c.seed, 7);
        assert_eq!(c.serve.listen, "0.0.0.0:1");
        assert!(PipelineConfig::default().with_overrides(&["nokey"]).is_err());
        assert!(PipelineConfig::default().with_overrides(&["embedding.dim=abc"]).is_err());
    }
}
