//! Test-only reference implementations and random instance generators.
//!
//! The oracle re-derives every step of the greedy loop from first principles
//! with full sorts, hash-map class counts, natural-log entropy and per-term
//! score products. It shares no code with the library's selection path.

#![allow(dead_code)]

use std::collections::HashMap;

use featsel::rng::DetRng;
use featsel::LabeledDataset;

pub const EPS: f64 = 1e-6;
pub const TIE_REL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Instance {
    pub columns: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub classes: usize,
    pub k: usize,
    pub t: usize,
}

impl Instance {
    pub fn dataset(&self) -> LabeledDataset {
        LabeledDataset::new(
            self.columns.clone(),
            self.labels.clone(),
            Some(self.classes),
            (0..self.columns.len()).map(|j| format!("f{j}")).collect(),
            (0..self.columns.len())
                .map(|j| if j % 2 == 0 { "material".to_string() } else { "object".to_string() })
                .collect(),
        )
        .unwrap()
    }
}

/// Random instance with up to `max_d` features, `max_m` samples, `max_c`
/// classes and `max_t` iterations. Values mix a small discrete set (to force
/// activation ties and non-positive columns) with continuous draws.
pub fn random_instance(rng: &mut DetRng, max_d: usize, max_m: usize, max_c: usize, max_t: usize) -> Instance {
    let d = 1 + rng.below(max_d);
    let m = 2 + rng.below(max_m - 1);
    let classes = 2 + rng.below(max_c - 1);
    let discrete = [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0];
    let mut columns: Vec<Vec<f64>> = (0..d)
        .map(|_| {
            let mode = rng.below(4);
            (0..m)
                .map(|_| match mode {
                    0 => discrete[rng.below(discrete.len())],
                    1 => rng.normal(),
                    2 => rng.normal() - 1.5,
                    _ => rng.uniform() * 4.0,
                })
                .collect()
        })
        .collect();
    if !columns.iter().any(|c| c.iter().any(|&v| v > 0.0)) {
        columns[0][0] = 1.0;
    }
    let labels = (0..m).map(|_| rng.below(classes)).collect();
    Instance {
        columns,
        labels,
        classes,
        k: 1 + rng.below(m),
        t: 1 + rng.below(max_t),
    }
}

pub fn oracle_top_k(column: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..column.len()).filter(|&i| column[i] > 0.0).collect();
    idx.sort_by(|&a, &b| column[b].partial_cmp(&column[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

pub fn oracle_entropy(labels: &[usize]) -> f64 {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let n = labels.len() as f64;
    let nats: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    (nats / std::f64::consts::LN_2).max(0.0)
}

/// `(feature, score)` per greedy step, recomputing every score from scratch.
pub fn oracle_select(inst: &Instance) -> Vec<(usize, f64)> {
    let sets: Vec<Vec<usize>> = inst.columns.iter().map(|c| oracle_top_k(c, inst.k)).collect();
    let entropies: Vec<Option<f64>> = sets
        .iter()
        .map(|s| {
            if s.is_empty() {
                None
            } else {
                let labels: Vec<usize> = s.iter().map(|&i| inst.labels[i]).collect();
                Some(oracle_entropy(&labels))
            }
        })
        .collect();
    let mut remaining: Vec<usize> = (0..sets.len()).filter(|&j| entropies[j].is_some()).collect();
    let mut w = vec![1.0f64; inst.labels.len()];
    let mut out = Vec::new();
    for _ in 0..inst.t {
        if remaining.is_empty() {
            break;
        }
        let total: f64 = w.iter().sum();
        for x in w.iter_mut() {
            *x /= total;
        }
        let scores: Vec<f64> = remaining
            .iter()
            .map(|&j| {
                let h = entropies[j].unwrap();
                sets[j].iter().map(|&k| w[k] * h).sum()
            })
            .collect();
        let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let pos = scores
            .iter()
            .position(|&s| s <= min + TIE_REL * min.abs())
            .unwrap();
        let j = remaining.remove(pos);
        let h = entropies[j].unwrap();
        for &k in &sets[j] {
            w[k] *= 1.0 + 1.0 / h.max(EPS);
        }
        out.push((j, scores[pos]));
    }
    out
}
