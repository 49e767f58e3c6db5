//! Per-feature top-K activation sets and their class entropy.
//!
//! A feature's top-K set holds the samples with the largest strictly positive
//! activations on it. Its class entropy (bits) measures how mixed the classes
//! of those samples are: 0 for a single class, `log2 C` for a uniform mix.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Samples with maximal strictly positive activation on one feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopKSet {
    pub feature_id: usize,
    /// Descending by activation; equal activations in ascending sample order.
    pub sample_ids: Vec<usize>,
    pub k_requested: usize,
}

impl TopKSet {
    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureStats {
    pub feature_id: usize,
    pub top_k: TopKSet,
    /// `None` exactly when the top-K set is empty.
    pub entropy_bits: Option<f64>,
}

impl FeatureStats {
    pub fn eligible(&self) -> bool {
        self.entropy_bits.is_some()
    }
}

/// Descending activation, then ascending sample index.
fn by_activation(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

pub fn top_k_samples(ds: &LabeledDataset, feature_id: usize, k: usize) -> Result<TopKSet> {
    if feature_id >= ds.feature_count() {
        return Err(Error::Index {
            index: feature_id,
            count: ds.feature_count(),
        });
    }
    if k == 0 {
        return Err(Error::Contract("K must be at least 1".into()));
    }
    let mut positives: Vec<(usize, f64)> = ds
        .column(feature_id)
        .iter()
        .copied()
        .enumerate()
        .filter(|&(_, v)| v > 0.0)
        .collect();
    if positives.len() > k {
        positives.select_nth_unstable_by(k - 1, by_activation);
        positives.truncate(k);
    }
    positives.sort_unstable_by(by_activation);
    Ok(TopKSet {
        feature_id,
        sample_ids: positives.into_iter().map(|(i, _)| i).collect(),
        k_requested: k,
    })
}

/// Shannon entropy (bits) of a class histogram. Empty classes contribute 0.
pub fn entropy_of_counts(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // A pure set yields -0.0.
    h.max(0.0)
}

pub fn class_entropy(t: &TopKSet, ds: &LabeledDataset) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::UndefinedEntropy {
            feature: t.feature_id,
        });
    }
    let labels = ds.labels();
    let mut counts = vec![0usize; ds.class_count()];
    for &s in &t.sample_ids {
        counts[labels[s]] += 1;
    }
    Ok(entropy_of_counts(&counts))
}

/// Top-K set and entropy for every column, in column order.
pub fn rank_all_features(ds: &LabeledDataset, k: usize) -> Result<Vec<FeatureStats>> {
    if k == 0 {
        return Err(Error::Contract("K must be at least 1".into()));
    }
    (0..ds.feature_count())
        .into_par_iter()
        .map(|j| {
            let top_k = top_k_samples(ds, j, k)?;
            let entropy_bits = if top_k.is_empty() {
                None
            } else {
                Some(class_entropy(&top_k, ds)?)
            };
            Ok(FeatureStats {
                feature_id: j,
                top_k,
                entropy_bits,
            })
        })
        .collect()
}
