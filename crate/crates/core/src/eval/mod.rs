//! Evaluation classifiers, train/test splits and robustness sweeps.
//!
//! Classification runs on feature columns standardized with training-split
//! statistics; selection always sees raw activations.

mod knn;
mod logreg;
mod sweep;

pub use knn::knn_classify;
pub use logreg::{logreg_predict, logreg_train, loss_and_gradient, LogRegConfig, LogisticModel};
pub use sweep::{
    evaluate_regimes, provenance_counts, sweep_k, sweep_t, ProvenanceCounts, RegimeRow, RegimeTable,
    SweepConfig, SweepCurve, SweepPoint, DEFAULT_K_GRID, DEFAULT_T_GRID,
};

use serde::Serialize;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::DetRng;

pub const DEFAULT_KNN_K: usize = 5;
pub const DEFAULT_SPLITS: usize = 10;

/// Dense row-major matrix fed to the classifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RowMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Contract(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Contract("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Gathers `rows x features` out of a column-major dataset.
    pub fn gather(ds: &LabeledDataset, rows: &[usize], features: &[usize]) -> Self {
        let mut data = vec![0.0; rows.len() * features.len()];
        for (c, &j) in features.iter().enumerate() {
            let col = ds.column(j);
            for (r, &i) in rows.iter().enumerate() {
                data[r * features.len() + c] = col[i];
            }
        }
        Self {
            rows: rows.len(),
            cols: features.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Per-column affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    /// Constant columns get scale 1.
    pub fn fit(x: &RowMatrix) -> Self {
        let n = x.rows.max(1) as f64;
        let mut mean = vec![0.0; x.cols];
        for i in 0..x.rows {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; x.cols];
        for i in 0..x.rows {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &mut RowMatrix) {
        let cols = x.cols;
        for chunk in x.data.chunks_mut(cols.max(1)) {
            for ((v, m), s) in chunk.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
    }
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Contract(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Contract("accuracy of an empty label set".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Disjoint train and test row sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: Vec<usize>, test: Vec<usize>, sample_count: usize) -> Result<Self> {
        let mut seen = vec![false; sample_count];
        for &i in train.iter().chain(&test) {
            if i >= sample_count {
                return Err(Error::Index {
                    index: i,
                    count: sample_count,
                });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Contract(format!("row {i} appears twice in the split")));
            }
        }
        if train.is_empty() || test.is_empty() {
            return Err(Error::Contract("train and test sets must be non-empty".into()));
        }
        Ok(Self { train, test, seed: 0 })
    }

    /// Random halves: `floor(n/2)` training rows, the rest for testing. Each
    /// half is sorted ascending.
    pub fn random_halves(sample_count: usize, seed: u64) -> Result<Self> {
        if sample_count < 2 {
            return Err(Error::Contract("need at least 2 rows to split".into()));
        }
        let mut rows: Vec<usize> = (0..sample_count).collect();
        DetRng::new(seed).shuffle(&mut rows);
        let mut test = rows.split_off(sample_count / 2);
        rows.sort_unstable();
        test.sort_unstable();
        Ok(Self {
            train: rows,
            test,
            seed,
        })
    }

    /// Split used by repeat `repeat` of a run seeded with `seed`.
    pub fn for_repeat(sample_count: usize, seed: u64, repeat: usize) -> Result<Self> {
        let split_seed = DetRng::derive(seed, repeat as u64).next_u64();
        Self::random_halves(sample_count, split_seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierConfig {
    Knn { k: usize },
    Logreg(LogRegConfig),
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Knn { k: DEFAULT_KNN_K }
    }
}

impl ClassifierConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierConfig::Knn { .. } => "knn",
            ClassifierConfig::Logreg(_) => "logreg",
        }
    }
}

/// Test-split predictions of a classifier trained on the split's training
/// rows, restricted to `features`.
pub fn predict_on_split(
    ds: &LabeledDataset,
    split: &SplitSpec,
    features: &[usize],
    classifier: &ClassifierConfig,
) -> Result<Vec<usize>> {
    if features.is_empty() {
        return Err(Error::Contract("no features to classify with".into()));
    }
    let mut train = RowMatrix::gather(ds, &split.train, features);
    let mut test = RowMatrix::gather(ds, &split.test, features);
    let scaler = Standardizer::fit(&train);
    scaler.apply(&mut train);
    scaler.apply(&mut test);
    let labels = ds.labels();
    let train_labels: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
    match classifier {
        ClassifierConfig::Knn { k } => knn_classify(&train, &train_labels, &test, *k),
        ClassifierConfig::Logreg(cfg) => {
            let model = logreg_train(&train, &train_labels, ds.class_count(), cfg)?;
            logreg_predict(&model, &test)
        }
    }
}

pub fn accuracy_on_split(
    ds: &LabeledDataset,
    split: &SplitSpec,
    features: &[usize],
    classifier: &ClassifierConfig,
) -> Result<f64> {
    let pred = predict_on_split(ds, split, features, classifier)?;
    let labels = ds.labels();
    let truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
    accuracy(&pred, &truth)
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
