//! Multi-label capability classifier: a two-layer perceptron from embedding
//! vectors to the ten top-level service categories.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbeddingTable;
use crate::graph::{Category, Graph, GraphError, NodeLabel, RelationType};
use crate::metrics::{multilabel, MetricsError, MultiLabelMetrics};
use crate::optim::{Adam, AdamConfig};
use crate::rng::stream;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("unknown manufacturer `{0}`")]
    UnknownManufacturer(String),
    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{folds} folds need at least {folds} samples, got {samples}")]
    TooFewSamples { folds: usize, samples: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Ten category indicators in [`Category::ALL`] order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelVector(pub [bool; 10]);

impl LabelVector {
    pub fn from_categories<I: IntoIterator<Item = Category>>(cats: I) -> Self {
        let mut v = [false; 10];
        for c in cats {
            v[c.index()] = true;
        }
        LabelVector(v)
    }

    pub fn categories(&self) -> Vec<Category> {
        Category::ALL.iter().copied().filter(|c| self.0[c.index()]).collect()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.categories().into_iter().map(Category::name).collect()
    }

    pub fn as_vec(&self) -> Vec<bool> {
        self.0.to_vec()
    }

    pub fn is_empty(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }
}

/// Union of category rollups over the manufacturer's provided services.
pub fn derive_labels(graph: &Graph, manufacturer: &str) -> Result<LabelVector, ClassifyError> {
    let idx = graph
        .idx(manufacturer)
        .filter(|&i| graph.node_at(i).label == NodeLabel::Manufacturer)
        .ok_or_else(|| ClassifyError::UnknownManufacturer(manufacturer.to_string()))?;
    let mut cats = Vec::new();
    for (s, _) in graph.out_edges(idx, RelationType::Provides) {
        cats.extend(graph.rollup_idx(s));
    }
    Ok(LabelVector::from_categories(cats))
}

/// Labels for every manufacturer, in graph order.
pub fn derive_all(graph: &Graph) -> Vec<(String, LabelVector)> {
    graph
        .nodes_with_label(NodeLabel::Manufacturer)
        .map(|n| (n.id.clone(), derive_labels(graph, &n.id).expect("manufacturer exists")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden: usize,
    pub adam: AdamConfig,
    pub epochs: usize,
    pub batch_size: usize,
    /// Train/validation/test fractions.
    pub split: [f64; 3],
    pub folds: usize,
    pub repeats: usize,
    pub threshold: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 20,
            adam: AdamConfig::default(),
            epochs: 100,
            batch_size: 32,
            split: [0.8, 0.1, 0.1],
            folds: 10,
            repeats: 3,
            threshold: 0.5,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(ClassifyError::InvalidConfig("epochs, batch_size and hidden must be positive".into()));
        }
        let sum: f64 = self.split.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.split.iter().any(|f| *f < 0.0) {
            return Err(ClassifyError::InvalidConfig(format!("split fractions sum to {sum}")));
        }
        Ok(())
    }
}

/// Dense `input → hidden (ReLU) → output (sigmoid)` network. Parameters
/// live in one flat buffer: `w1 | b1 | w2 | b2`, weights row-major by
/// output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub params: Vec<f64>,
}

const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    #[serde(flatten)]
    model: MlpModel,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy from a logit, stable at both tails.
fn bce_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    pub labels: Vec<bool>,
}

impl MlpModel {
    fn n_params(input: usize, hidden: usize, output: usize) -> usize {
        hidden * input + hidden + output * hidden + output
    }

    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        MlpModel {
            input,
            hidden,
            output,
            params: vec![0.0; Self::n_params(input, hidden, output)],
        }
    }

    /// He-uniform hidden weights, Glorot-uniform output weights, zero biases.
    pub fn init(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        let mut m = Self::zeros(input, hidden, output);
        let mut rng = stream(seed, &[0xc1a5]);
        let he = (6.0 / input as f64).sqrt();
        let gl = (6.0 / (hidden + output) as f64).sqrt();
        let (w1_end, b1_end) = (hidden * input, hidden * input + hidden);
        for p in &mut m.params[..w1_end] {
            *p = rng.random_range(-he..he);
        }
        for p in &mut m.params[b1_end..b1_end + output * hidden] {
            *p = rng.random_range(-gl..gl);
        }
        m
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * self.input;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.output * self.hidden;
        (w1, b1, w2)
    }

    /// Hidden activations and output logits.
    fn forward(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (o1, o2, o3) = self.offsets();
        let p = &self.params;
        let h: Vec<f64> = (0..self.hidden)
            .map(|j| {
                let row = &p[j * self.input..(j + 1) * self.input];
                (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p[o1 + j]).max(0.0)
            })
            .collect();
        let z = (0..self.output)
            .map(|k| {
                let row = &p[o2 + k * self.hidden..o2 + (k + 1) * self.hidden];
                row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + p[o3 + k]
            })
            .collect();
        (h, z)
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>, ClassifyError> {
        if x.len() != self.input {
            return Err(ClassifyError::ShapeMismatch {
                expected: self.input,
                actual: x.len(),
            });
        }
        Ok(self.forward(x).1.into_iter().map(sigmoid).collect())
    }

    /// Probabilities plus labels set where probability ≥ `threshold`.
    pub fn predict(&self, x: &[f64], threshold: f64) -> Result<Prediction, ClassifyError> {
        let probabilities = self.probabilities(x)?;
        let labels = probabilities.iter().map(|&p| p >= threshold).collect();
        Ok(Prediction { probabilities, labels })
    }

    /// Mean binary cross-entropy over samples and labels, with its gradient
    /// in parameter-buffer layout.
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[&[bool]]) -> (f64, Vec<f64>) {
        let (o1, o2, o3) = self.offsets();
        let mut g = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / (xs.len().max(1) * self.output) as f64;
        for (x, y) in xs.iter().zip(ys) {
            let (h, z) = self.forward(x);
            let mut dh = vec![0.0; self.hidden];
            for k in 0..self.output {
                let yk = y[k] as u8 as f64;
                loss += bce_logit(z[k], yk) * scale;
                let dz = (sigmoid(z[k]) - yk) * scale;
                g[o3 + k] += dz;
                for j in 0..self.hidden {
                    g[o2 + k * self.hidden + j] += dz * h[j];
                    dh[j] += dz * self.params[o2 + k * self.hidden + j];
                }
            }
            for j in 0..self.hidden {
                if h[j] <= 0.0 {
                    continue;
                }
                g[o1 + j] += dh[j];
                for i in 0..self.input {
                    g[j * self.input + i] += dh[j] * x[i];
                }
            }
        }
        (loss, g)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelFile {
            version: MODEL_VERSION,
            model: self.clone(),
        })
        .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| ClassifyError::ModelFile(e.to_string()))?;
        if f.version != MODEL_VERSION {
            return Err(ClassifyError::ModelFile(format!("unsupported version {}", f.version)));
        }
        let m = f.model;
        let want = Self::n_params(m.input, m.hidden, m.output);
        if m.params.len() != want {
            return Err(ClassifyError::ShapeMismatch {
                expected: want,
                actual: m.params.len(),
            });
        }
        if !m.is_finite() {
            return Err(ClassifyError::ModelFile("non-finite parameter".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifyError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ClassifyError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Feature rows and label rows, aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<bool>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Joins labels with embedding rows; every labeled id needs a vector.
    pub fn from_table(table: &EmbeddingTable, labels: &[(String, LabelVector)]) -> Result<Self, ClassifyError> {
        let mut d = Dataset {
            ids: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
        };
        for (id, lv) in labels {
            let v = table.get(id).ok_or_else(|| ClassifyError::MissingEmbedding(id.clone()))?;
            d.ids.push(id.clone());
            d.x.push(v.to_vec());
            d.y.push(lv.as_vec());
        }
        Ok(d)
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i].clone()).collect(),
        }
    }

    fn shapes(&self) -> Result<(usize, usize), ClassifyError> {
        let input = self.x.first().ok_or(ClassifyError::EmptyTrainingSet)?.len();
        let output = self.y.first().ok_or(ClassifyError::EmptyTrainingSet)?.len();
        for (x, y) in self.x.iter().zip(&self.y) {
            if x.len() != input {
                return Err(ClassifyError::ShapeMismatch {
                    expected: input,
                    actual: x.len(),
                });
            }
            if y.len() != output {
                return Err(ClassifyError::ShapeMismatch {
                    expected: output,
                    actual: y.len(),
                });
            }
        }
        Ok((input, output))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    pub sizes: [usize; 3],
    pub train: MultiLabelMetrics,
    pub validation: Option<MultiLabelMetrics>,
    pub test: Option<MultiLabelMetrics>,
}

pub fn evaluate(model: &MlpModel, data: &Dataset, threshold: f64) -> Result<MultiLabelMetrics, ClassifyError> {
    let pred: Vec<Vec<bool>> = data
        .x
        .iter()
        .map(|x| model.predict(x, threshold).map(|p| p.labels))
        .collect::<Result<_, _>>()?;
    Ok(multilabel(&pred, &data.y)?)
}

/// Mini-batch Adam on one dataset; returns the model and per-epoch mean loss.
pub fn fit(data: &Dataset, cfg: &TrainConfig, seed: u64) -> Result<(MlpModel, Vec<f64>), ClassifyError> {
    cfg.validate()?;
    let (input, output) = data.shapes()?;
    let mut model = MlpModel::init(input, cfg.hidden, output, seed);
    let mut opt = Adam::new(cfg.adam, model.params.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = stream(seed, &[0xe0c, epoch as u64]);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| data.x[i].as_slice()).collect();
            let ys: Vec<&[bool]> = batch.iter().map(|&i| data.y[i].as_slice()).collect();
            let (loss, g) = model.loss_and_grad(&xs, &ys);
            total += loss * batch.len() as f64;
            opt.step(&mut model.params, &g);
        }
        history.push(total / data.len() as f64);
    }
    Ok((model, history))
}

/// Seeded train/validation/test split, training on the first part.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<(MlpModel, TrainReport), ClassifyError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    let n = data.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(cfg.seed, &[0x5b11]));
    let n_train = ((n as f64 * cfg.split[0]).round() as usize).clamp(1, n);
    let n_val = ((n as f64 * cfg.split[1]).round() as usize).min(n - n_train);
    let train_set = data.subset(&idx[..n_train]);
    let val_set = data.subset(&idx[n_train..n_train + n_val]);
    let test_set = data.subset(&idx[n_train + n_val..]);
    let (model, epoch_loss) = fit(&train_set, cfg, cfg.seed)?;
    let opt_eval = |d: &Dataset| -> Result<Option<MultiLabelMetrics>, ClassifyError> {
        if d.is_empty() {
            Ok(None)
        } else {
            evaluate(&model, d, cfg.threshold).map(Some)
        }
    };
    let report = TrainReport {
        epoch_loss,
        sizes: [train_set.len(), val_set.len(), test_set.len()],
        train: evaluate(&model, &train_set, cfg.threshold)?,
        validation: opt_eval(&val_set)?,
        test: opt_eval(&test_set)?,
    };
    Ok((model, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub repeat: usize,
    pub fold: usize,
    pub train_ids: usize,
    pub validation_ids: usize,
    pub train: MultiLabelMetrics,
    pub validation: MultiLabelMetrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

fn mean_std(v: &[f64]) -> MeanStd {
    let n = v.len().max(1) as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    MeanStd { mean, std: var.sqrt() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub subset_accuracy: MeanStd,
    pub label_accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

/// Fold membership: for each repeat, a seeded permutation dealt round-robin
/// into `folds` parts.
pub fn fold_partition(n: usize, folds: usize, repeat: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream(seed, &[0xf01d, repeat as u64]));
    let mut parts = vec![Vec::new(); folds];
    for (i, p) in perm.into_iter().enumerate() {
        parts[i % folds].push(p);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    parts
}

/// `folds × repeats` cross-validation; metrics are reported on the held-out
/// fold and on the training folds themselves.
pub fn cross_validate(data: &Dataset, cfg: &TrainConfig) -> Result<CvReport, ClassifyError> {
    cfg.validate()?;
    if cfg.folds < 2 || data.len() < cfg.folds {
        return Err(ClassifyError::TooFewSamples {
            folds: cfg.folds,
            samples: data.len(),
        });
    }
    let jobs: Vec<(usize, usize, Vec<usize>, Vec<usize>)> = (0..cfg.repeats.max(1))
        .flat_map(|r| {
            let parts = fold_partition(data.len(), cfg.folds, r, cfg.seed);
            (0..cfg.folds)
                .map(|f| {
                    let val = parts[f].clone();
                    let tr: Vec<usize> = parts
                        .iter()
                        .enumerate()
                        .filter(|(g, _)| *g != f)
                        .flat_map(|(_, p)| p.iter().copied())
                        .collect();
                    (r, f, tr, val)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let folds: Vec<FoldResult> = jobs
        .par_iter()
        .map(|(r, f, tr, val)| {
            let tset = data.subset(tr);
            let vset = data.subset(val);
            let seed = crate::rng::derive_seed(cfg.seed, &[*r as u64, *f as u64]);
            let (model, _) = fit(&tset, cfg, seed)?;
            Ok(FoldResult {
                repeat: *r,
                fold: *f,
                train_ids: tset.len(),
                validation_ids: vset.len(),
                train: evaluate(&model, &tset, cfg.threshold)?,
                validation: evaluate(&model, &vset, cfg.threshold)?,
            })
        })
        .collect::<Result<_, ClassifyError>>()?;
    let pick = |f: &dyn Fn(&MultiLabelMetrics) -> Option<f64>| -> MeanStd {
        mean_std(&folds.iter().map(|r| f(&r.validation).unwrap_or(0.0)).collect::<Vec<_>>())
    };
    Ok(CvReport {
        subset_accuracy: pick(&|m| Some(m.subset_accuracy)),
        label_accuracy: pick(&|m| Some(m.label_accuracy)),
        precision: pick(&|m| m.micro.precision),
        recall: pick(&|m| m.micro.recall),
        f1: pick(&|m| m.micro.f1),
        folds,
    })
}
