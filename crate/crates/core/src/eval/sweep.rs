//! Repeated-split experiments: accuracy versus top-K size, versus the
//! number of integrated features, and across feature regimes (each
//! provenance block alone, all features concatenated, selected features).

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use super::{accuracy, mean_std, predict_on_split, ClassifierConfig, SplitSpec};
use crate::dataset::LabeledDataset;
use crate::diversity::{avg_entropy, diversity_report, eligible_ids, CorrectnessMatrix, DiversityReport};
use crate::error::{Error, Result};
use crate::selector::{run_pipeline, KSpec, SelectionResult};

pub const DEFAULT_K_GRID: [f64; 6] = [0.01, 0.05, 0.1, 0.25, 0.5, 1.0];
pub const DEFAULT_T_GRID: [usize; 6] = [100, 200, 400, 1000, 2000, 3000];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Number of random equal splits.
    pub repeats: usize,
    pub seed: u64,
    pub classifier: ClassifierConfig,
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub parameter: f64,
    /// Resolved K for a K sweep; smallest effective T across repeats for a T sweep.
    pub resolved: usize,
    pub mean: f64,
    pub std: f64,
    pub repeats: usize,
    /// Mean top-K set size over eligible features (K sweep only). Falls short
    /// of K when features have few positive activations.
    pub mean_top_k_size: Option<f64>,
    /// T exceeded the eligible feature count in some repeat.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub parameter_name: String,
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    /// `parameter,mean,std,repeats` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,mean,std,repeats\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.parameter, p.mean, p.std, p.repeats));
        }
        out
    }
}

fn strictly_increasing<T: PartialOrd>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[0] < w[1])
}

pub fn sweep_k(ds: &LabeledDataset, fractions: &[f64], t: usize, config: &SweepConfig) -> Result<SweepCurve> {
    config.validate()?;
    if fractions.is_empty() || !strictly_increasing(fractions) {
        return Err(Error::Config("K fractions must be non-empty and strictly increasing".into()));
    }
    for &f in fractions {
        KSpec::Fraction(f).validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..fractions.len())
        .flat_map(|f| (0..config.repeats).map(move |r| (f, r)))
        .collect();
    let outcomes: Vec<(f64, usize, f64, bool)> = jobs
        .par_iter()
        .map(|&(f, r)| {
            let split = SplitSpec::for_repeat(ds.sample_count(), config.seed, r)?;
            let train = ds.subset_rows(&split.train)?;
            let (stats, selection) = run_pipeline(&train, KSpec::Fraction(fractions[f]), t)?;
            let eligible: Vec<usize> = stats.iter().filter(|s| s.eligible()).map(|s| s.top_k.len()).collect();
            let mean_size = eligible.iter().sum::<usize>() as f64 / eligible.len().max(1) as f64;
            let acc = accuracy_of(ds, &split, &selection.selected, &config.classifier)?;
            Ok((acc, selection.k, mean_size, selection.selected.len() < t))
        })
        .collect::<Result<_>>()?;

    let points = fractions
        .iter()
        .enumerate()
        .map(|(f, &fraction)| {
            let chunk = &outcomes[f * config.repeats..(f + 1) * config.repeats];
            let accs: Vec<f64> = chunk.iter().map(|o| o.0).collect();
            let sizes: Vec<f64> = chunk.iter().map(|o| o.2).collect();
            let (mean, std) = mean_std(&accs);
            SweepPoint {
                parameter: fraction,
                resolved: chunk[0].1,
                mean,
                std,
                repeats: config.repeats,
                mean_top_k_size: Some(mean_std(&sizes).0),
                clamped: chunk.iter().any(|o| o.3),
            }
        })
        .collect();
    Ok(SweepCurve {
        parameter_name: "k_fraction".into(),
        points,
    })
}

/// Selection runs once per repeat at the largest T; smaller T values reuse
/// prefixes of that sequence.
pub fn sweep_t(ds: &LabeledDataset, t_values: &[usize], k: KSpec, config: &SweepConfig) -> Result<SweepCurve> {
    config.validate()?;
    k.validate()?;
    if t_values.is_empty() || !strictly_increasing(t_values) || t_values[0] == 0 {
        return Err(Error::Config("T values must be positive and strictly increasing".into()));
    }
    let t_max = *t_values.last().unwrap_or(&1);
    let per_repeat: Vec<Vec<(f64, usize)>> = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let split = SplitSpec::for_repeat(ds.sample_count(), config.seed, r)?;
            let train = ds.subset_rows(&split.train)?;
            let (_, selection) = run_pipeline(&train, k, t_max)?;
            t_values
                .iter()
                .map(|&t| {
                    let prefix = selection.prefix(t);
                    let acc = accuracy_of(ds, &split, &prefix.selected, &config.classifier)?;
                    Ok((acc, prefix.selected.len()))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let points = t_values
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let accs: Vec<f64> = per_repeat.iter().map(|r| r[i].0).collect();
            let effective = per_repeat.iter().map(|r| r[i].1).min().unwrap_or(0);
            let (mean, std) = mean_std(&accs);
            SweepPoint {
                parameter: t as f64,
                resolved: effective,
                mean,
                std,
                repeats: config.repeats,
                mean_top_k_size: None,
                clamped: effective < t,
            }
        })
        .collect();
    Ok(SweepCurve {
        parameter_name: "t".into(),
        points,
    })
}

fn accuracy_of(
    ds: &LabeledDataset,
    split: &SplitSpec,
    features: &[usize],
    classifier: &ClassifierConfig,
) -> Result<f64> {
    let pred = predict_on_split(ds, split, features, classifier)?;
    let truth: Vec<usize> = split.test.iter().map(|&i| ds.labels()[i]).collect();
    accuracy(&pred, &truth)
}

/// Cumulative number of selected features per provenance block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProvenanceCounts {
    /// Sorted block tags of the dataset.
    pub blocks: Vec<String>,
    /// `cumulative[t][b]`: features of block `b` among the first `t + 1` selected.
    pub cumulative: Vec<Vec<usize>>,
}

impl ProvenanceCounts {
    pub fn final_counts(&self) -> Vec<(String, usize)> {
        let last = self.cumulative.last();
        self.blocks
            .iter()
            .enumerate()
            .map(|(b, tag)| (tag.clone(), last.map_or(0, |row| row[b])))
            .collect()
    }

    /// `iteration,<block>...` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration");
        for b in &self.blocks {
            out.push(',');
            out.push_str(b);
        }
        out.push('\n');
        for (t, row) in self.cumulative.iter().enumerate() {
            out.push_str(&(t + 1).to_string());
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn provenance_counts(result: &SelectionResult, ds: &LabeledDataset) -> ProvenanceCounts {
    let blocks: Vec<String> = ds
        .provenance()
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut running = vec![0usize; blocks.len()];
    let cumulative = result
        .selected
        .iter()
        .map(|&j| {
            let tag = &ds.provenance()[j];
            if let Some(b) = blocks.iter().position(|x| x == tag) {
                running[b] += 1;
            }
            running.clone()
        })
        .collect();
    ProvenanceCounts { blocks, cumulative }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeRow {
    pub name: String,
    /// Feature count per repeat, averaged.
    pub features: f64,
    pub mean: f64,
    pub std: f64,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeTable {
    pub repeats: usize,
    pub k: usize,
    pub t: usize,
    pub rows: Vec<RegimeRow>,
    /// Diversity of the per-block classifiers over all test predictions, with
    /// average entropies of candidate and selected features (averaged over repeats).
    pub block_diversity: Option<DiversityReport>,
    pub h_f: f64,
    pub h_s: f64,
    pub notes: Vec<String>,
    /// Test-split predictions of the first repeat, per regime.
    #[serde(skip)]
    pub first_predictions: Vec<(String, Vec<usize>)>,
    #[serde(skip)]
    pub first_truth: Vec<usize>,
}

pub const CONCAT_REGIME: &str = "concatenated";
pub const SELECTED_REGIME: &str = "selected";

struct RepeatOutcome {
    accuracies: Vec<f64>,
    feature_counts: Vec<usize>,
    predictions: Vec<Vec<usize>>,
    truth: Vec<usize>,
    k: usize,
    h_f: f64,
    h_s: f64,
}

/// Accuracy of each provenance block alone, all features, and the selected
/// features, over `config.repeats` random equal splits.
pub fn evaluate_regimes(ds: &LabeledDataset, k: KSpec, t: usize, config: &SweepConfig) -> Result<RegimeTable> {
    config.validate()?;
    k.validate()?;
    let blocks = ds.blocks();
    let mut notes = Vec::new();
    let mut fixed: Vec<(String, Vec<usize>)> = Vec::new();
    if blocks.len() > 1 {
        for b in &blocks {
            fixed.push((b.clone(), ds.features_tagged(b)));
        }
    } else {
        notes.push(format!(
            "single provenance block `{}`: block and concatenated regimes coincide",
            blocks.first().map(String::as_str).unwrap_or("")
        ));
    }
    fixed.push((CONCAT_REGIME.into(), (0..ds.feature_count()).collect()));
    let block_rows = if blocks.len() > 1 { blocks.len() } else { 0 };

    let outcomes: Vec<RepeatOutcome> = (0..config.repeats)
        .into_par_iter()
        .map(|r| {
            let split = SplitSpec::for_repeat(ds.sample_count(), config.seed, r)?;
            let train = ds.subset_rows(&split.train)?;
            let (stats, selection) = run_pipeline(&train, k, t)?;
            let h_f = avg_entropy(&stats, &eligible_ids(&stats))?;
            let h_s = avg_entropy(&stats, &selection.selected)?;
            let truth: Vec<usize> = split.test.iter().map(|&i| ds.labels()[i]).collect();
            let mut accuracies = Vec::new();
            let mut feature_counts = Vec::new();
            let mut predictions = Vec::new();
            for features in fixed.iter().map(|(_, f)| f).chain(std::iter::once(&selection.selected)) {
                let pred = predict_on_split(ds, &split, features, &config.classifier)?;
                accuracies.push(accuracy(&pred, &truth)?);
                feature_counts.push(features.len());
                predictions.push(pred);
            }
            Ok(RepeatOutcome {
                accuracies,
                feature_counts,
                predictions,
                truth,
                k: selection.k,
                h_f,
                h_s,
            })
        })
        .collect::<Result<_>>()?;

    let names: Vec<String> = fixed
        .iter()
        .map(|(n, _)| n.clone())
        .chain(std::iter::once(SELECTED_REGIME.to_string()))
        .collect();
    let rows = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let accs: Vec<f64> = outcomes.iter().map(|o| o.accuracies[i]).collect();
            let counts: Vec<f64> = outcomes.iter().map(|o| o.feature_counts[i] as f64).collect();
            let (mean, std) = mean_std(&accs);
            RegimeRow {
                name: name.clone(),
                features: mean_std(&counts).0,
                mean,
                std,
                accuracies: accs,
            }
        })
        .collect();

    let block_diversity = if block_rows >= 2 {
        let mut correct: Vec<Vec<bool>> = vec![Vec::new(); block_rows];
        for o in &outcomes {
            for (b, row) in correct.iter_mut().enumerate() {
                row.extend(o.predictions[b].iter().zip(&o.truth).map(|(p, y)| p == y));
            }
        }
        Some(diversity_report(&CorrectnessMatrix::new(correct)?))
    } else {
        None
    };
    let h_f = mean_std(&outcomes.iter().map(|o| o.h_f).collect::<Vec<_>>()).0;
    let h_s = mean_std(&outcomes.iter().map(|o| o.h_s).collect::<Vec<_>>()).0;
    let block_diversity = block_diversity.map(|mut d| {
        d.h_f = Some(h_f);
        d.h_s = Some(h_s);
        d
    });

    let first = &outcomes[0];
    Ok(RegimeTable {
        repeats: config.repeats,
        k: first.k,
        t,
        rows,
        block_diversity,
        h_f,
        h_s,
        notes,
        first_predictions: names.into_iter().zip(first.predictions.iter().cloned()).collect(),
        first_truth: first.truth.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selector::SelectionStep;

    fn tagged(tags: &[&str]) -> LabeledDataset {
        let cols = tags.iter().map(|_| vec![1.0, 2.0]).collect();
        LabeledDataset::new(
            cols,
            vec![0, 1],
            None,
            (0..tags.len()).map(|j| format!("c{j}")).collect(),
            tags.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    fn selection(ids: &[usize]) -> SelectionResult {
        SelectionResult {
            k: 1,
            t_requested: ids.len(),
            eligible_count: ids.len(),
            selected: ids.to_vec(),
            steps: ids
                .iter()
                .map(|&j| SelectionStep {
                    feature_id: j,
                    entropy_bits: 0.0,
                    weighted_score: 0.0,
                    penalized_sample_ids: vec![],
                })
                .collect(),
        }
    }

    #[test]
    fn counts_per_block() {
        let ds = tagged(&["material", "material", "object", "object"]);
        let c = provenance_counts(&selection(&[0, 2, 1]), &ds);
        assert_eq!(c.final_counts(), vec![("material".into(), 2), ("object".into(), 1)]);
        for (t, row) in c.cumulative.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), t + 1);
        }
        assert_eq!(c.to_csv(), "iteration,material,object\n1,1,0\n2,1,1\n3,2,1\n");
    }

    #[test]
    fn single_block_counts() {
        let ds = tagged(&["material", "material"]);
        let c = provenance_counts(&selection(&[1, 0]), &ds);
        assert_eq!(c.final_counts(), vec![("material".into(), 2)]);
    }

    #[test]
    fn csv_shape() {
        let curve = SweepCurve {
            parameter_name: "t".into(),
            points: vec![SweepPoint {
                parameter: 100.0,
                resolved: 100,
                mean: 0.5,
                std: 0.0,
                repeats: 1,
                mean_top_k_size: None,
                clamped: false,
            }],
        };
        assert_eq!(curve.to_csv(), "parameter,mean,std,repeats\n100,0.5,0,1\n");
    }
}
