//! Entropy-weighted greedy selection and integration of features drawn from
//! several learned representations.
//!
//! Each feature is judged by the class entropy of the samples that activate
//! it most strongly ([`ranking`]). A boosting-style loop then picks features
//! with the lowest weighted class entropy and up-weights the samples they
//! cover, so later picks favour samples not yet represented ([`selector`]).
//! Around that core sit data loading ([`dataset`]), classifier diversity
//! statistics ([`diversity`]), evaluation classifiers and sweeps ([`eval`]),
//! synthetic planted-feature data ([`synth`]) and the `featsel` CLI ([`cli`]).

#![forbid(unsafe_code)]

pub mod cli;
pub mod dataset;
pub mod diversity;
pub mod error;
pub mod eval;
pub mod ranking;
pub mod rng;
pub mod selector;
pub mod synth;

use std::io::Write;
use std::path::Path;

pub use dataset::{concatenate, load_dataset, LabeledDataset, ProvenanceManifest};
pub use diversity::{avg_entropy, diversity_report, CorrectnessMatrix, DiversityReport};
pub use error::{Error, Result};
pub use ranking::{class_entropy, rank_all_features, top_k_samples, FeatureStats, TopKSet};
pub use selector::{run_pipeline, select_features, KSpec, SelectionResult, SelectionStep};

/// Writes `bytes` to a temporary sibling of `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}
