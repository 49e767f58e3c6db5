//! Machine-readable (JSON) and human-readable report bodies.
//!
//! JSON field order follows the struct declarations below and floats use
//! shortest round-trip formatting, so identical runs give identical bytes.

use serde::Serialize;

use super::config::RunConfig;
use crate::diversity::DiversityReport;
use crate::eval::{RegimeTable, SweepCurve};

#[derive(Debug, Serialize)]
pub struct StepEntry {
    pub step: usize,
    pub feature_id: usize,
    pub name: String,
    pub block: String,
    pub entropy_bits: f64,
    pub weighted_score: f64,
    pub penalized_sample_ids: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct SelectReport {
    pub command: &'static str,
    pub config: RunConfig,
    pub k_spec: String,
    pub k: usize,
    pub t: usize,
    pub samples: usize,
    pub features: usize,
    pub eligible: usize,
    pub selected_count: usize,
    pub h_f: f64,
    pub h_s: f64,
    pub selected: Vec<usize>,
    pub final_block_counts: Vec<(String, usize)>,
    pub steps: Vec<StepEntry>,
}

impl SelectReport {
    pub fn human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "selected {} of {} eligible features ({} total, {} samples)\n",
            self.selected_count, self.eligible, self.features, self.samples
        ));
        out.push_str(&format!("K = {} (spec {}), T = {}\n", self.k, self.k_spec, self.t));
        out.push_str(&format!(
            "average entropy: candidates {:.4} bits, selected {:.4} bits\n",
            self.h_f, self.h_s
        ));
        for (block, count) in &self.final_block_counts {
            out.push_str(&format!("  {block:<12} {count:>6}\n"));
        }
        out.push_str(&format!(
            "\n{:>6}  {:>8}  {:<24} {:<10} {:>10}  {:>12}\n",
            "step", "feature", "name", "block", "entropy", "score"
        ));
        for s in &self.steps {
            out.push_str(&format!(
                "{:>6}  {:>8}  {:<24} {:<10} {:>10.6}  {:>12.6e}\n",
                s.step, s.feature_id, s.name, s.block, s.entropy_bits, s.weighted_score
            ));
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct EvaluateReport {
    pub command: &'static str,
    pub config: RunConfig,
    pub table: RegimeTable,
}

impl EvaluateReport {
    pub fn human(&self) -> String {
        let t = &self.table;
        let mut out = format!(
            "{} classifier, {} splits, K = {}, T = {}\n\n",
            self.config.classifier.name(),
            t.repeats,
            t.k,
            t.t
        );
        out.push_str(&format!("{:<16} {:>10} {:>18}\n", "regime", "features", "accuracy (%)"));
        for row in &t.rows {
            out.push_str(&format!(
                "{:<16} {:>10.1} {:>10.2} ± {:<5.2}\n",
                row.name,
                row.features,
                100.0 * row.mean,
                100.0 * row.std
            ));
        }
        out.push_str(&format!(
            "\naverage entropy: candidates {:.4} bits, selected {:.4} bits\n",
            t.h_f, t.h_s
        ));
        if let Some(d) = &t.block_diversity {
            out.push('\n');
            out.push_str(&diversity_table(d));
        }
        for note in &t.notes {
            out.push_str(&format!("note: {note}\n"));
        }
        out
    }
}

#[derive(Debug, Serialize)]
pub struct DiversityCommandReport {
    pub command: &'static str,
    pub prediction_files: Vec<String>,
    pub report: DiversityReport,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"))
}

/// Rows in the order: average entropies, kappa, Q, KW, disagreement, GD.
pub fn diversity_table(d: &DiversityReport) -> String {
    let mut out = String::new();
    let rows = [
        ("H^F (candidates)", fmt_opt(d.h_f)),
        ("H^S (selected)", fmt_opt(d.h_s)),
        ("kappa", fmt_opt(d.kappa)),
        ("Q statistic", fmt_opt(d.q_statistic)),
        ("Kohavi-Wolpert", format!("{:.4}", d.kw_variance)),
        ("disagreement", format!("{:.4}", d.disagreement)),
        ("generalized div.", fmt_opt(d.generalized_diversity)),
    ];
    for (name, value) in rows {
        out.push_str(&format!("{name:<20} {value:>10}\n"));
    }
    if d.q_undefined_pairs > 0 {
        out.push_str(&format!(
            "note: {} classifier pair(s) excluded from Q (zero denominator)\n",
            d.q_undefined_pairs
        ));
    }
    out
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub command: &'static str,
    pub config: RunConfig,
    pub curve: SweepCurve,
}

impl SweepReport {
    pub fn human(&self) -> String {
        let mut out = format!(
            "{:>12} {:>9} {:>18} {:>8}\n",
            self.curve.parameter_name, "resolved", "accuracy (%)", "repeats"
        );
        for p in &self.curve.points {
            out.push_str(&format!(
                "{:>12} {:>9} {:>10.2} ± {:<5.2} {:>8}{}\n",
                p.parameter,
                p.resolved,
                100.0 * p.mean,
                100.0 * p.std,
                p.repeats,
                if p.clamped { "  (clamped to eligible features)" } else { "" }
            ));
            if let Some(size) = p.mean_top_k_size {
                if size < p.resolved as f64 {
                    out.push_str(&format!(
                        "{:>12} mean top-K size {:.1} < K: few positive activations\n",
                        "", size
                    ));
                }
            }
        }
        out
    }
}
