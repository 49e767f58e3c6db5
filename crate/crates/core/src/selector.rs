//! Greedy integration of features by weighted class entropy.
//!
//! Every sample starts with weight 1. Each iteration normalizes the weights,
//! picks the remaining feature minimizing `sum_{k in top-K} w_k * H_j`, and
//! multiplies the weights of that feature's top-K samples by `1 + 1/H_j`, so
//! later features covering the same samples score worse. Entropies are
//! computed once up front; only the weights evolve.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::ranking::{rank_all_features, FeatureStats, TopKSet};

/// Lower clamp on `H` in the penalty multiplier; pure sets have `H = 0`.
pub const ENTROPY_EPSILON: f64 = 1e-6;

/// Scores within this relative distance of the minimum count as tied, and
/// the lowest feature id wins. Exact-arithmetic ties otherwise split on
/// summation-order rounding.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Integrated feature count used when none is given.
pub const DEFAULT_T: usize = 3000;

/// Top-K size used when none is given: 10% of the training samples.
pub const DEFAULT_K_FRACTION: f64 = 0.1;

/// Weights never drop below the smallest normal double after normalization.
const WEIGHT_FLOOR: f64 = f64::MIN_POSITIVE;

/// Top-K size as an absolute count or as a fraction of the sample count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KSpec {
    Count(usize),
    Fraction(f64),
}

impl Default for KSpec {
    fn default() -> Self {
        KSpec::Fraction(DEFAULT_K_FRACTION)
    }
}

impl KSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KSpec::Count(0) => Err(Error::Config("K count must be at least 1".into())),
            KSpec::Fraction(f) if !(f > 0.0 && f <= 1.0) => Err(Error::Config(format!(
                "K fraction must lie in (0, 1], got {f}"
            ))),
            _ => Ok(()),
        }
    }

    /// `max(1, round(fraction * samples))` for fractions; counts pass through.
    pub fn resolve(&self, sample_count: usize) -> usize {
        match *self {
            KSpec::Count(k) => k.max(1),
            KSpec::Fraction(f) => ((f * sample_count as f64).round() as usize).max(1),
        }
    }
}

impl FromStr for KSpec {
    type Err = Error;

    /// `"50"` is a count; `"0.1"` or `"1.0"` is a fraction.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let spec = if let Ok(k) = s.parse::<usize>() {
            KSpec::Count(k)
        } else {
            let f: f64 = s
                .parse()
                .map_err(|_| Error::Config(format!("K must be a count or fraction, got `{s}`")))?;
            KSpec::Fraction(f)
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for KSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KSpec::Count(k) => write!(f, "{k}"),
            KSpec::Fraction(x) => write!(f, "{x:?}"),
        }
    }
}

/// One greedy iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionStep {
    pub feature_id: usize,
    pub entropy_bits: f64,
    /// Weighted class entropy at selection time, on normalized weights.
    pub weighted_score: f64,
    pub penalized_sample_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub k: usize,
    pub t_requested: usize,
    pub eligible_count: usize,
    pub selected: Vec<usize>,
    pub steps: Vec<SelectionStep>,
}

impl SelectionResult {
    /// The selection a smaller `T` would have produced.
    pub fn prefix(&self, t: usize) -> SelectionResult {
        let n = t.min(self.selected.len());
        SelectionResult {
            k: self.k,
            t_requested: t,
            eligible_count: self.eligible_count,
            selected: self.selected[..n].to_vec(),
            steps: self.steps[..n].to_vec(),
        }
    }
}

/// Sum of the top-K weights times the feature's entropy.
pub fn weighted_score(stats: &FeatureStats, weights: &[f64]) -> Result<f64> {
    let h = stats.entropy_bits.ok_or_else(|| {
        Error::Contract(format!("feature {} is not eligible", stats.feature_id))
    })?;
    Ok(score(&stats.top_k, h, weights))
}

fn score(top_k: &TopKSet, entropy: f64, weights: &[f64]) -> f64 {
    let mass: f64 = top_k.sample_ids.iter().map(|&k| weights[k]).sum();
    mass * entropy
}

/// `w_k <- w_k * (1 + 1 / max(H, eps))` for every `k` in the top-K set.
pub fn penalize(weights: &mut [f64], top_k: &TopKSet, entropy: f64) {
    let factor = 1.0 + 1.0 / entropy.max(ENTROPY_EPSILON);
    for &k in &top_k.sample_ids {
        weights[k] *= factor;
    }
}

pub fn normalize(weights: &mut [f64]) -> Result<()> {
    if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Numeric(format!(
            "weight {i} is {}, expected positive and finite",
            weights[i]
        )));
    }
    let total: f64 = weights.iter().sum();
    if !total.is_finite() {
        return Err(Error::Numeric("weight total overflowed".into()));
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(())
}

/// Mutable state of the greedy loop.
#[derive(Debug, Clone)]
pub struct SelectionState<'a> {
    pub weights: Vec<f64>,
    pub selected: Vec<usize>,
    /// Eligible candidates not yet selected, ascending by feature id.
    remaining: Vec<&'a FeatureStats>,
    pub iteration: usize,
}

impl<'a> SelectionState<'a> {
    pub fn new(stats: &'a [FeatureStats], sample_count: usize) -> Result<Self> {
        let mut remaining: Vec<&FeatureStats> = stats.iter().filter(|s| s.eligible()).collect();
        remaining.sort_by_key(|s| s.feature_id);
        if remaining.windows(2).any(|w| w[0].feature_id == w[1].feature_id) {
            return Err(Error::Contract("duplicate feature id in stats".into()));
        }
        if let Some(s) = remaining
            .iter()
            .find(|s| s.top_k.sample_ids.iter().any(|&k| k >= sample_count))
        {
            return Err(Error::Contract(format!(
                "top-K set of feature {} references a sample beyond {sample_count}",
                s.feature_id
            )));
        }
        Ok(Self {
            weights: vec![1.0; sample_count],
            selected: Vec::new(),
            remaining,
            iteration: 0,
        })
    }

    pub fn remaining_ids(&self) -> Vec<usize> {
        self.remaining.iter().map(|s| s.feature_id).collect()
    }

    /// One iteration: normalize, select the argmin, penalize. `None` once the
    /// candidates are exhausted.
    pub fn step(&mut self) -> Result<Option<SelectionStep>> {
        if self.remaining.is_empty() {
            return Ok(None);
        }
        normalize(&mut self.weights)?;
        for w in self.weights.iter_mut() {
            *w = w.max(WEIGHT_FLOOR);
        }

        let weights = &self.weights;
        let scores: Vec<f64> = self
            .remaining
            .par_iter()
            .map(|s| score(&s.top_k, s.entropy_bits.unwrap_or(0.0), weights))
            .collect();
        let best = tolerant_argmin(&scores);

        let chosen = self.remaining.remove(best);
        let entropy = chosen.entropy_bits.unwrap_or(0.0);
        penalize(&mut self.weights, &chosen.top_k, entropy);
        self.selected.push(chosen.feature_id);
        self.iteration += 1;
        Ok(Some(SelectionStep {
            feature_id: chosen.feature_id,
            entropy_bits: entropy,
            weighted_score: scores[best],
            penalized_sample_ids: chosen.top_k.sample_ids.clone(),
        }))
    }
}

/// Position of the first score within [`TIE_TOLERANCE`] of the minimum.
/// Candidates are in ascending id order, so the first hit is the lowest id.
fn tolerant_argmin(scores: &[f64]) -> usize {
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = min + TIE_TOLERANCE * min.abs();
    scores
        .iter()
        .position(|&s| s <= bound)
        .expect("non-empty candidate list")
}

/// Runs up to `t` greedy iterations over the eligible features in `stats`.
pub fn select_features(stats: &[FeatureStats], sample_count: usize, t: usize) -> Result<SelectionResult> {
    if t == 0 {
        return Err(Error::Config("T must be at least 1".into()));
    }
    let mut state = SelectionState::new(stats, sample_count)?;
    let eligible_count = state.remaining.len();
    if eligible_count == 0 {
        return Err(Error::EmptyCandidates);
    }
    let mut steps = Vec::with_capacity(t.min(eligible_count));
    while steps.len() < t {
        match state.step()? {
            Some(step) => steps.push(step),
            None => break,
        }
    }
    Ok(SelectionResult {
        k: stats.first().map(|s| s.top_k.k_requested).unwrap_or(0),
        t_requested: t,
        eligible_count,
        selected: state.selected,
        steps,
    })
}

/// Ranking followed by greedy selection, with `K` resolved against the
/// dataset's sample count.
pub fn run_pipeline(ds: &LabeledDataset, k: KSpec, t: usize) -> Result<(Vec<FeatureStats>, SelectionResult)> {
    k.validate()?;
    let k = k.resolve(ds.sample_count());
    let stats = rank_all_features(ds, k)?;
    let mut result = select_features(&stats, ds.sample_count(), t)?;
    result.k = k;
    Ok((stats, result))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(id: usize, samples: &[usize], h: f64) -> FeatureStats {
        FeatureStats {
            feature_id: id,
            top_k: TopKSet {
                feature_id: id,
                sample_ids: samples.to_vec(),
                k_requested: samples.len(),
            },
            entropy_bits: Some(h),
        }
    }

    #[test]
    fn weighted_score_examples() {
        let w = [0.1, 0.2, 0.3, 0.25];
        assert!((weighted_score(&stats(0, &[0, 1], 1.0), &w).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(weighted_score(&stats(0, &[0, 1, 2], 0.0), &w).unwrap(), 0.0);
        assert_eq!(weighted_score(&stats(0, &[3], 2.0), &w).unwrap(), 0.5);
        let mut s = stats(0, &[], 0.0);
        s.entropy_bits = None;
        assert!(matches!(weighted_score(&s, &w), Err(Error::Contract(_))));
    }

    #[test]
    fn penalize_examples() {
        let t = stats(0, &[0], 0.0).top_k;
        let mut w = vec![0.25, 0.75];
        penalize(&mut w, &t, 2.0);
        assert_eq!(w, vec![0.375, 0.75]);
        let mut w = vec![0.25, 0.75];
        penalize(&mut w, &t, 1.0);
        assert_eq!(w, vec![0.5, 0.75]);
        let mut w = vec![0.25, 0.75];
        penalize(&mut w, &t, 0.0);
        assert_eq!(w[0], 0.25 * (1.0 + 1e6));
        assert_eq!(w[1], 0.75);
    }

    #[test]
    fn normalize_examples() {
        let mut w = vec![1.0; 4];
        normalize(&mut w).unwrap();
        assert_eq!(w, vec![0.25; 4]);
        let mut w = vec![2.0, 6.0];
        normalize(&mut w).unwrap();
        assert_eq!(w, vec![0.25, 0.75]);
        let before = vec![0.1, 0.2, 0.3, 0.4];
        let mut w = before.clone();
        normalize(&mut w).unwrap();
        for (a, b) in w.iter().zip(&before) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(normalize(&mut [1.0, 0.0]).is_err());
        assert!(normalize(&mut [1.0, f64::NAN]).is_err());
        assert!(normalize(&mut [1.0, -1.0]).is_err());
    }

    #[test]
    fn pure_features_win_in_id_order() {
        // labels A,A,B,B,A,B
        let s = vec![
            stats(0, &[0, 1], 0.0),
            stats(1, &[2, 3], 0.0),
            stats(2, &[0, 2], 1.0),
        ];
        let r = select_features(&s, 6, 2).unwrap();
        assert_eq!(r.selected, vec![0, 1]);
        assert_eq!(r.steps[0].weighted_score, 0.0);
        assert_eq!(r.steps[1].weighted_score, 0.0);
    }

    #[test]
    fn redundant_copy_is_suppressed() {
        let h = 0.811278;
        let s = vec![
            stats(0, &[0, 1, 2, 3], h),
            stats(1, &[0, 1, 2, 3], h),
            stats(2, &[4, 5, 6, 7], h),
        ];
        let r = select_features(&s, 8, 2).unwrap();
        assert_eq!(r.selected, vec![0, 2]);
    }

    #[test]
    fn exhausts_eligible_features() {
        let mut s = vec![stats(0, &[0], 1.0), stats(1, &[1], 0.5), stats(2, &[], 0.0)];
        s[2].entropy_bits = None;
        let r = select_features(&s, 2, 10).unwrap();
        assert_eq!(r.selected.len(), 2);
        assert_eq!(r.eligible_count, 2);
        assert_eq!(r.selected, vec![1, 0]);
    }

    #[test]
    fn no_candidates() {
        let mut s = vec![stats(0, &[], 0.0)];
        s[0].entropy_bits = None;
        assert!(matches!(select_features(&s, 3, 1), Err(Error::EmptyCandidates)));
        assert!(matches!(select_features(&s, 3, 0), Err(Error::Config(_))));
    }

    #[test]
    fn k_spec_resolution() {
        assert_eq!(KSpec::Fraction(0.1).resolve(500), 50);
        assert_eq!(KSpec::Fraction(0.001).resolve(500), 1);
        assert_eq!(KSpec::Count(7).resolve(500), 7);
        assert_eq!("0.1".parse::<KSpec>().unwrap(), KSpec::Fraction(0.1));
        assert_eq!("50".parse::<KSpec>().unwrap(), KSpec::Count(50));
        assert_eq!("1.0".parse::<KSpec>().unwrap(), KSpec::Fraction(1.0));
        assert!("0".parse::<KSpec>().is_err());
        assert!("1.5".parse::<KSpec>().is_err());
        assert!("abc".parse::<KSpec>().is_err());
        assert_eq!(KSpec::default().to_string(), "0.1");
    }

    #[test]
    fn tolerant_argmin_prefers_lowest_index() {
        assert_eq!(tolerant_argmin(&[0.3, 0.1, 0.1]), 1);
        assert_eq!(tolerant_argmin(&[0.1 + 1e-17, 0.1]), 0);
        assert_eq!(tolerant_argmin(&[0.1 + 1e-9, 0.1]), 1);
        assert_eq!(tolerant_argmin(&[1e-300, 0.0]), 1);
    }
}
