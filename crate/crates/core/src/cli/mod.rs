//! `featsel` command-line interface.
//!
//! Every command writes a JSON report (for tools) and a text report (for
//! people) into the output directory and prints the text report. Outputs are
//! written atomically and are byte-identical across runs with the same
//! configuration.

pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dataset::{concatenate, load_dataset_with, LabeledDataset, LoadOptions, ProvenanceManifest, UNKNOWN_TAG};
use crate::diversity::{avg_entropy, diversity_report, eligible_ids, CorrectnessMatrix};
use crate::error::{Error, Result};
use crate::eval::{evaluate_regimes, provenance_counts, sweep_k, sweep_t, SweepConfig, DEFAULT_K_GRID, DEFAULT_T_GRID};
use crate::selector::run_pipeline;
use crate::synth::{generate, SynthConfig};
use crate::write_atomic;

use config::{ConfigFile, RunConfig};
use report::{diversity_table, DiversityCommandReport, EvaluateReport, SelectReport, StepEntry, SweepReport};

#[derive(Debug, Parser)]
#[command(name = "featsel", version, about = "Entropy-weighted greedy feature selection and integration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select integrated features and write the selection report.
    Select(CommonArgs),
    /// Compare accuracy of per-block, concatenated and selected features.
    Evaluate(CommonArgs),
    /// Diversity statistics of aligned prediction files.
    Diversity(DiversityArgs),
    /// Accuracy versus top-K size or versus the number of selected features.
    Sweep(SweepArgs),
    /// Write a planted-feature synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Key-value config file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Feature matrix (comma-separated, with a `label` column).
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Second representation block, concatenated after `--features`.
    #[arg(long = "features-b")]
    pub features_b: Option<PathBuf>,
    /// `prefix = tag` provenance manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Top-K size: a count (`50`) or a fraction of training rows (`0.1`).
    #[arg(long)]
    pub k: Option<String>,
    /// Number of features to integrate.
    #[arg(long)]
    pub t: Option<usize>,
    /// Class count override.
    #[arg(long)]
    pub classes: Option<usize>,
    /// `knn` or `logreg`.
    #[arg(long)]
    pub classifier: Option<String>,
    #[arg(long = "knn-k")]
    pub knn_k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Number of random equal train/test splits.
    #[arg(long)]
    pub splits: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DiversityArgs {
    /// One prediction file per classifier: one label per line.
    #[arg(long = "predictions", required = true, num_args = 1..)]
    pub predictions: Vec<PathBuf>,
    /// True labels, one per line, aligned with the prediction files.
    #[arg(long)]
    pub truth: PathBuf,
    // with --features, average entropies are added to the report
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    K,
    T,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Swept parameter.
    #[arg(long, value_enum, default_value = "k")]
    pub sweep: SweepKind,
    /// Comma-separated grid; K fractions or T values.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<String>>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long = "samples-per-class")]
    pub samples_per_class: Option<usize>,
    /// Informative features per class.
    #[arg(long)]
    pub informative: Option<usize>,
    /// Class-independent noise features.
    #[arg(long)]
    pub noise: Option<usize>,
    /// Exact copies per informative feature.
    #[arg(long)]
    pub duplicates: Option<usize>,
    #[arg(long = "on-mean", allow_hyphen_values = true)]
    pub on_mean: Option<f64>,
    #[arg(long = "off-mean", allow_hyphen_values = true)]
    pub off_mean: Option<f64>,
    #[arg(long)]
    pub spread: Option<f64>,
    #[arg(long = "noise-mean", allow_hyphen_values = true)]
    pub noise_mean: Option<f64>,
    #[arg(long = "noise-spread")]
    pub noise_spread: Option<f64>,
    /// Output file stem.
    #[arg(long)]
    pub stem: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Select(args) => cmd_select(&resolve(&args)?),
        Command::Evaluate(args) => cmd_evaluate(&resolve(&args)?),
        Command::Diversity(args) => cmd_diversity(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Synth(args) => cmd_synth(&args),
    }
}

fn config_file(args: &CommonArgs) -> Result<ConfigFile> {
    match &args.config {
        Some(path) => ConfigFile::load(path),
        None => Ok(ConfigFile::default()),
    }
}

fn resolve(args: &CommonArgs) -> Result<RunConfig> {
    RunConfig::resolve(args, &config_file(args)?)
}

/// Loads `--features` (and `--features-b`, concatenated after it). Without a
/// manifest entry, columns are tagged `block_a` / `block_b` by input file.
pub fn load_inputs(config: &RunConfig) -> Result<LabeledDataset> {
    let path = config
        .features
        .as_ref()
        .ok_or_else(|| Error::Config("missing --features".into()))?;
    let manifest = match &config.manifest {
        Some(m) => ProvenanceManifest::load(m)?,
        None => ProvenanceManifest::default(),
    };
    let options = LoadOptions {
        class_count: config.classes,
    };
    let a = load_dataset_with(path, &manifest, options)?;
    let Some(path_b) = &config.features_b else {
        return Ok(a);
    };
    let b = load_dataset_with(path_b, &manifest, options)?;
    // align class counts before joining
    let classes = a.class_count().max(b.class_count());
    let a = retag_unknown(with_class_count(a, classes)?, "block_a")?;
    let b = retag_unknown(with_class_count(b, classes)?, "block_b")?;
    concatenate(&a, &b)
}

fn with_class_count(ds: LabeledDataset, classes: usize) -> Result<LabeledDataset> {
    if ds.class_count() == classes {
        return Ok(ds);
    }
    let columns = (0..ds.feature_count()).map(|j| ds.column(j).to_vec()).collect();
    LabeledDataset::new(
        columns,
        ds.labels().to_vec(),
        Some(classes),
        ds.feature_names().to_vec(),
        ds.provenance().to_vec(),
    )
}

fn retag_unknown(ds: LabeledDataset, tag: &str) -> Result<LabeledDataset> {
    let tags = ds
        .provenance()
        .iter()
        .map(|t| if t == UNKNOWN_TAG { tag.to_string() } else { t.clone() })
        .collect();
    ds.with_provenance(tags)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Contract(format!("report serialization failed: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn cmd_select(config: &RunConfig) -> Result<()> {
    let ds = load_inputs(config)?;
    let (stats, result) = run_pipeline(&ds, config.k, config.t)?;
    let counts = provenance_counts(&result, &ds);
    let steps = result
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| StepEntry {
            step: i + 1,
            feature_id: s.feature_id,
            name: ds.feature_names()[s.feature_id].clone(),
            block: ds.provenance()[s.feature_id].clone(),
            entropy_bits: s.entropy_bits,
            weighted_score: s.weighted_score,
            penalized_sample_ids: s.penalized_sample_ids.clone(),
        })
        .collect();
    let report = SelectReport {
        command: "select",
        config: config.clone(),
        k_spec: config.k.to_string(),
        k: result.k,
        t: result.t_requested,
        samples: ds.sample_count(),
        features: ds.feature_count(),
        eligible: result.eligible_count,
        selected_count: result.selected.len(),
        h_f: avg_entropy(&stats, &eligible_ids(&stats))?,
        h_s: avg_entropy(&stats, &result.selected)?,
        selected: result.selected.clone(),
        final_block_counts: counts.final_counts(),
        steps,
    };
    ensure_dir(&config.out)?;
    write_json(&config.out.join("selection.json"), &report)?;
    let human = report.human();
    write_atomic(&config.out.join("selection.txt"), human.as_bytes())?;
    write_atomic(&config.out.join("provenance.csv"), counts.to_csv().as_bytes())?;
    print!("{}", human.lines().take(24).map(|l| format!("{l}\n")).collect::<String>());
    Ok(())
}

pub fn cmd_evaluate(config: &RunConfig) -> Result<()> {
    let ds = load_inputs(config)?;
    let sweep = SweepConfig {
        repeats: config.splits,
        seed: config.seed,
        classifier: config.classifier,
    };
    let table = evaluate_regimes(&ds, config.k, config.t, &sweep)?;
    ensure_dir(&config.out)?;
    for (name, pred) in &table.first_predictions {
        write_atomic(&config.out.join(format!("predictions_{name}.txt")), label_lines(pred).as_bytes())?;
    }
    write_atomic(&config.out.join("truth.txt"), label_lines(&table.first_truth).as_bytes())?;
    let report = EvaluateReport {
        command: "evaluate",
        config: config.clone(),
        table,
    };
    write_json(&config.out.join("evaluate.json"), &report)?;
    let human = report.human();
    write_atomic(&config.out.join("evaluate.txt"), human.as_bytes())?;
    print!("{human}");
    Ok(())
}

fn label_lines(labels: &[usize]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

/// One non-negative integer label per line; blank lines and `#` comments skipped.
pub fn read_label_file(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        labels.push(line.parse().map_err(|_| Error::Label {
            row: labels.len() + 1,
            message: format!("{}:{}: `{line}` is not a label", path.display(), i + 1),
        })?);
    }
    Ok(labels)
}

pub fn cmd_diversity(args: &DiversityArgs) -> Result<()> {
    let file = config_file(&args.common)?;
    let predictions = args
        .predictions
        .iter()
        .map(|p| read_label_file(p))
        .collect::<Result<Vec<_>>>()?;
    let truth = read_label_file(&args.truth)?;
    let mut report = diversity_report(&CorrectnessMatrix::from_predictions(&predictions, &truth)?);

    let config = RunConfig::resolve(&args.common, &file)?;
    if config.features.is_some() {
        let ds = load_inputs(&config)?;
        let (stats, result) = run_pipeline(&ds, config.k, config.t)?;
        report.h_f = Some(avg_entropy(&stats, &eligible_ids(&stats))?);
        report.h_s = Some(avg_entropy(&stats, &result.selected)?);
    }
    let out = DiversityCommandReport {
        command: "diversity",
        prediction_files: args.predictions.iter().map(|p| p.display().to_string()).collect(),
        report,
    };
    ensure_dir(&config.out)?;
    write_json(&config.out.join("diversity.json"), &out)?;
    let human = diversity_table(&out.report);
    write_atomic(&config.out.join("diversity.txt"), human.as_bytes())?;
    print!("{human}");
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let file = config_file(&args.common)?;
    let config = RunConfig::resolve(&args.common, &file)?;
    let ds = load_inputs(&config)?;
    let sweep = SweepConfig {
        repeats: config.splits,
        seed: config.seed,
        classifier: config.classifier,
    };
    let grid: Option<Vec<String>> = match &args.grid {
        Some(g) => Some(g.clone()),
        None => file.get("grid").map(|g| g.split(',').map(|s| s.trim().to_string()).collect()),
    };
    let (curve, stem) = match args.sweep {
        SweepKind::K => {
            let fractions = match grid {
                Some(g) => parse_grid::<f64>(&g)?,
                None => DEFAULT_K_GRID.to_vec(),
            };
            (sweep_k(&ds, &fractions, config.t, &sweep)?, "sweep_k")
        }
        SweepKind::T => {
            let values = match grid {
                Some(g) => parse_grid::<usize>(&g)?,
                None => DEFAULT_T_GRID.to_vec(),
            };
            (sweep_t(&ds, &values, config.k, &sweep)?, "sweep_t")
        }
    };
    ensure_dir(&config.out)?;
    write_atomic(&config.out.join(format!("{stem}.csv")), curve.to_csv().as_bytes())?;
    let report = SweepReport {
        command: "sweep",
        config,
        curve,
    };
    write_json(&report.config.out.join(format!("{stem}.json")), &report)?;
    let human = report.human();
    write_atomic(&report.config.out.join(format!("{stem}.txt")), human.as_bytes())?;
    print!("{human}");
    Ok(())
}

fn parse_grid<T: std::str::FromStr>(items: &[String]) -> Result<Vec<T>> {
    items
        .iter()
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad grid value `{s}`")))
        })
        .collect()
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let file = config_file(&args.common)?;
    let d = SynthConfig::default();
    let config = SynthConfig {
        classes: file.pick(args.common.classes, "classes")?.unwrap_or(d.classes),
        samples_per_class: file
            .pick(args.samples_per_class, "samples_per_class")?
            .unwrap_or(d.samples_per_class),
        informative_per_class: file
            .pick(args.informative, "informative")?
            .unwrap_or(d.informative_per_class),
        noise_features: file.pick(args.noise, "noise")?.unwrap_or(d.noise_features),
        duplicates: file.pick(args.duplicates, "duplicates")?.unwrap_or(d.duplicates),
        on_class_mean: file.pick(args.on_mean, "on_mean")?.unwrap_or(d.on_class_mean),
        off_class_mean: file.pick(args.off_mean, "off_mean")?.unwrap_or(d.off_class_mean),
        spread: file.pick(args.spread, "spread")?.unwrap_or(d.spread),
        noise_mean: file.pick(args.noise_mean, "noise_mean")?.unwrap_or(d.noise_mean),
        noise_spread: file.pick(args.noise_spread, "noise_spread")?.unwrap_or(d.noise_spread),
        seed: file.pick(args.common.seed, "seed")?.unwrap_or(d.seed),
    };
    let out = file
        .pick(args.common.out.clone(), "out")?
        .unwrap_or_else(|| PathBuf::from(config::DEFAULT_OUT_DIR));
    let stem = file
        .pick(args.stem.clone(), "stem")?
        .unwrap_or_else(|| "synth".to_string());
    let synth = generate(&config)?;
    let written = synth.write(&out, &stem)?;

    #[derive(Serialize)]
    struct SynthReport<'a> {
        command: &'static str,
        config: &'a SynthConfig,
        samples: usize,
        features: usize,
        planted: Vec<&'a str>,
        files: Vec<String>,
    }
    let names = synth.dataset.feature_names();
    let report = SynthReport {
        command: "synth",
        config: &config,
        samples: synth.dataset.sample_count(),
        features: synth.dataset.feature_count(),
        planted: synth.informative.iter().map(|&j| names[j].as_str()).collect(),
        files: written.iter().map(|p| p.display().to_string()).collect(),
    };
    write_json(&out.join(format!("{stem}.json")), &report)?;
    println!(
        "wrote {} samples x {} features ({} planted) to {}",
        report.samples,
        report.features,
        report.planted.len(),
        written[0].display()
    );
    Ok(())
}
