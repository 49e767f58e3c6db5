//! Diversity statistics over classifier correctness patterns, plus average
//! class entropies of candidate and selected features.
//!
//! With `L` classifiers, `N` samples, `l_i` the number of classifiers correct
//! on sample `i` and `p̄` the mean accuracy:
//!
//! - Kohavi-Wolpert variance: `1/(N L^2) * sum_i l_i (L - l_i)`
//! - disagreement: pairwise mean of `(N01 + N10) / N`
//! - Q statistic: pairwise mean of `(N11 N00 - N01 N10) / (N11 N00 + N01 N10)`
//! - interrater agreement: `1 - (1/L) sum_i l_i (L - l_i) / (N (L - 1) p̄ (1 - p̄))`
//! - generalized diversity: `1 - p(2) / p(1)` over the distribution of the
//!   number of failing classifiers per sample
//!
//! Undefined values are reported as `None` rather than zeroed.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ranking::FeatureStats;

/// `L x N` correctness indicators: entry `(l, i)` is true iff classifier `l`
/// is correct on sample `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectnessMatrix {
    rows: Vec<Vec<bool>>,
}

impl CorrectnessMatrix {
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Contract(format!(
                "need at least 2 classifiers, got {}",
                rows.len()
            )));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::Contract("need at least 1 sample".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Contract("classifier rows differ in length".into()));
        }
        Ok(Self { rows })
    }

    /// Rows of 0/1 integers; any other value is rejected.
    pub fn from_binary(rows: &[Vec<u8>]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&v| match v {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(Error::Contract(format!("entry {other} is not 0 or 1"))),
                    })
                    .collect()
            })
            .collect::<Result<Vec<Vec<bool>>>>()?;
        Self::new(rows)
    }

    /// Correctness of each prediction vector against `truth`.
    pub fn from_predictions(predictions: &[Vec<usize>], truth: &[usize]) -> Result<Self> {
        let rows = predictions
            .iter()
            .enumerate()
            .map(|(l, p)| {
                if p.len() != truth.len() {
                    return Err(Error::Contract(format!(
                        "prediction set {l} has {} labels, truth has {}",
                        p.len(),
                        truth.len()
                    )));
                }
                Ok(p.iter().zip(truth).map(|(a, b)| a == b).collect())
            })
            .collect::<Result<Vec<Vec<bool>>>>()?;
        Self::new(rows)
    }

    pub fn classifiers(&self) -> usize {
        self.rows.len()
    }

    pub fn samples(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    /// Number of classifiers correct on each sample.
    fn correct_counts(&self) -> Vec<usize> {
        (0..self.samples())
            .map(|i| self.rows.iter().filter(|r| r[i]).count())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiversityReport {
    pub classifiers: usize,
    pub samples: usize,
    pub mean_accuracy: f64,
    pub kappa: Option<f64>,
    pub q_statistic: Option<f64>,
    /// Pairs whose Q denominator vanished; excluded from the Q average.
    pub q_undefined_pairs: usize,
    pub kw_variance: f64,
    pub disagreement: f64,
    pub generalized_diversity: Option<f64>,
    /// Mean class entropy over all candidate features.
    pub h_f: Option<f64>,
    /// Mean class entropy over selected features.
    pub h_s: Option<f64>,
}

/// Arithmetic mean of the entropies of `subset`.
pub fn avg_entropy(stats: &[FeatureStats], subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::Contract("average entropy of an empty subset".into()));
    }
    let mut total = 0.0;
    for &id in subset {
        let s = stats
            .iter()
            .find(|s| s.feature_id == id)
            .ok_or(Error::Index {
                index: id,
                count: stats.len(),
            })?;
        total += s
            .entropy_bits
            .ok_or_else(|| Error::Contract(format!("feature {id} is not eligible")))?;
    }
    Ok(total / subset.len() as f64)
}

/// Ids of all eligible features; the candidate set over which `h_f` averages.
pub fn eligible_ids(stats: &[FeatureStats]) -> Vec<usize> {
    stats
        .iter()
        .filter(|s| s.eligible())
        .map(|s| s.feature_id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn diversity_report(cm: &CorrectnessMatrix) -> DiversityReport {
    let l = cm.classifiers();
    let n = cm.samples();
    let lf = l as f64;
    let nf = n as f64;
    let counts = cm.correct_counts();

    let spread: f64 = counts.iter().map(|&c| (c * (l - c)) as f64).sum();
    let kw_variance = spread / (nf * lf * lf);

    let mean_accuracy = counts.iter().sum::<usize>() as f64 / (nf * lf);
    let chance = mean_accuracy * (1.0 - mean_accuracy);
    let kappa = (chance > 0.0).then(|| 1.0 - (spread / lf) / (nf * (lf - 1.0) * chance));

    let mut disagreement_sum = 0.0;
    let mut q_sum = 0.0;
    let mut q_defined = 0usize;
    let mut pairs = 0usize;
    for a in 0..l {
        for b in a + 1..l {
            let (mut n11, mut n00, mut n10, mut n01) = (0usize, 0usize, 0usize, 0usize);
            for (&x, &y) in cm.rows[a].iter().zip(&cm.rows[b]) {
                match (x, y) {
                    (true, true) => n11 += 1,
                    (false, false) => n00 += 1,
                    (true, false) => n10 += 1,
                    (false, true) => n01 += 1,
                }
            }
            pairs += 1;
            disagreement_sum += (n01 + n10) as f64 / nf;
            let agree = (n11 * n00) as f64;
            let cross = (n01 * n10) as f64;
            if agree + cross > 0.0 {
                q_sum += (agree - cross) / (agree + cross);
                q_defined += 1;
            }
        }
    }

    // share[i] = fraction of samples on which exactly i classifiers fail
    let mut share = vec![0.0; l + 1];
    for &c in &counts {
        share[l - c] += 1.0 / nf;
    }
    let p1: f64 = (1..=l).map(|i| i as f64 / lf * share[i]).sum();
    let p2: f64 = (1..=l)
        .map(|i| (i * (i - 1)) as f64 / (lf * (lf - 1.0)) * share[i])
        .sum();
    let generalized_diversity = (p1 > 0.0).then(|| 1.0 - p2 / p1);

    DiversityReport {
        classifiers: l,
        samples: n,
        mean_accuracy,
        kappa,
        q_statistic: (q_defined > 0).then(|| q_sum / q_defined as f64),
        q_undefined_pairs: pairs - q_defined,
        kw_variance,
        disagreement: disagreement_sum / pairs as f64,
        generalized_diversity,
        h_f: None,
        h_s: None,
    }
}
