//! Multinomial logistic regression trained by full-batch gradient descent.
//!
//! Parameters are laid out as `[W (classes x dims, row-major), b (classes)]`.
//! The objective is mean cross-entropy plus `l2/2 * ||W||^2`; the bias is not
//! regularized.

use serde::Serialize;

use super::RowMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRegConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.1,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub classes: usize,
    pub dims: usize,
    /// Flattened parameters, see module docs.
    pub params: Vec<f64>,
    /// Objective value before each epoch's update.
    pub loss_history: Vec<f64>,
}

impl LogisticModel {
    fn scores(&self, row: &[f64], out: &mut [f64]) {
        logits(&self.params, self.classes, self.dims, row, out);
    }
}

fn logits(params: &[f64], classes: usize, dims: usize, row: &[f64], out: &mut [f64]) {
    let (w, b) = params.split_at(classes * dims);
    for c in 0..classes {
        let wc = &w[c * dims..(c + 1) * dims];
        out[c] = b[c] + wc.iter().zip(row).map(|(a, x)| a * x).sum::<f64>();
    }
}

/// In-place softmax; returns `log(sum(exp(z)))`.
fn softmax(z: &mut [f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
    max + total.ln()
}

/// Objective and its analytic gradient at `params`.
pub fn loss_and_gradient(
    params: &[f64],
    x: &RowMatrix,
    y: &[usize],
    classes: usize,
    l2: f64,
) -> (f64, Vec<f64>) {
    let dims = x.cols();
    let n = x.rows() as f64;
    let mut grad = vec![0.0; params.len()];
    let mut z = vec![0.0; classes];
    let mut loss = 0.0;
    for i in 0..x.rows() {
        let row = x.row(i);
        logits(params, classes, dims, row, &mut z);
        let target_logit = z[y[i]];
        let log_norm = softmax(&mut z);
        loss += log_norm - target_logit;
        z[y[i]] -= 1.0;
        let (gw, gb) = grad.split_at_mut(classes * dims);
        for c in 0..classes {
            let r = z[c] / n;
            gb[c] += r;
            for (g, v) in gw[c * dims..(c + 1) * dims].iter_mut().zip(row) {
                *g += r * v;
            }
        }
    }
    loss /= n;
    let weight_count = classes * dims;
    for (g, w) in grad[..weight_count].iter_mut().zip(&params[..weight_count]) {
        *g += l2 * w;
    }
    loss += 0.5 * l2 * params[..weight_count].iter().map(|w| w * w).sum::<f64>();
    (loss, grad)
}

pub fn logreg_train(
    x: &RowMatrix,
    y: &[usize],
    classes: usize,
    config: &LogRegConfig,
) -> Result<LogisticModel> {
    if y.len() != x.rows() {
        return Err(Error::Contract(format!(
            "{} labels for {} rows",
            y.len(),
            x.rows()
        )));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= classes) {
        return Err(Error::Contract(format!("label {bad} not below {classes}")));
    }
    let mut present = vec![false; classes];
    y.iter().for_each(|&c| present[c] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::Degenerate(
            "training set must contain at least two classes".into(),
        ));
    }
    let dims = x.cols();
    let mut params = vec![0.0; classes * (dims + 1)];
    let mut loss_history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (loss, grad) = loss_and_gradient(&params, x, y, classes, config.l2);
        loss_history.push(loss);
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
    }
    Ok(LogisticModel {
        classes,
        dims,
        params,
        loss_history,
    })
}

/// Argmax of the class scores; ties go to the smallest class.
pub fn logreg_predict(model: &LogisticModel, x: &RowMatrix) -> Result<Vec<usize>> {
    if x.cols() != model.dims {
        return Err(Error::Contract(format!(
            "model expects {} features, got {}",
            model.dims,
            x.cols()
        )));
    }
    let mut z = vec![0.0; model.classes];
    Ok((0..x.rows())
        .map(|i| {
            model.scores(x.row(i), &mut z);
            let mut best = 0;
            for c in 1..model.classes {
                if z[c] > z[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}
