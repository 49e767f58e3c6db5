//! Run configuration: command-line flags override config-file values, which
//! override defaults.
//!
//! The config file holds `key = value` lines; `#` starts a comment. Keys are
//! the long flag names, with `-` or `_` as separator.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::CommonArgs;
use crate::error::{Error, Result};
use crate::eval::{ClassifierConfig, LogRegConfig, DEFAULT_KNN_K, DEFAULT_SPLITS};
use crate::selector::{KSpec, DEFAULT_T};

pub const DEFAULT_OUT_DIR: &str = "featsel-out";

const KNOWN_KEYS: &[&str] = &[
    "features",
    "features_b",
    "manifest",
    "k",
    "t",
    "classes",
    "classifier",
    "knn_k",
    "epochs",
    "lr",
    "l2",
    "splits",
    "seed",
    "out",
    "sweep",
    "grid",
    "samples_per_class",
    "informative",
    "noise",
    "duplicates",
    "on_mean",
    "off_mean",
    "spread",
    "noise_mean",
    "noise_spread",
    "stem",
];

/// Parsed `key = value` config file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {} is not `key = value`", i + 1)))?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown config key `{key}` on line {}", i + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// `flag` if given, else the parsed file value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
            })
            .transpose()
    }
}

/// Fully resolved settings shared by the data-driven commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub features: Option<PathBuf>,
    pub features_b: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    #[serde(serialize_with = "display")]
    pub k: KSpec,
    pub t: usize,
    pub classes: Option<usize>,
    pub classifier: ClassifierConfig,
    pub splits: usize,
    pub seed: u64,
    pub out: PathBuf,
}

fn display<S: serde::Serializer>(k: &KSpec, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&k.to_string())
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs, file: &ConfigFile) -> Result<Self> {
        let k = match file.pick(args.k.clone(), "k")? {
            Some(s) => s.parse::<KSpec>()?,
            None => KSpec::default(),
        };
        let t = file.pick(args.t, "t")?.unwrap_or(DEFAULT_T);
        if t == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        let splits = file.pick(args.splits, "splits")?.unwrap_or(DEFAULT_SPLITS);
        if splits == 0 {
            return Err(Error::Config("split count must be at least 1".into()));
        }
        let classifier_name = file
            .pick(args.classifier.clone(), "classifier")?
            .unwrap_or_else(|| "knn".to_string());
        let classifier = match classifier_name.as_str() {
            "knn" => {
                let k = file.pick(args.knn_k, "knn_k")?.unwrap_or(DEFAULT_KNN_K);
                if k == 0 {
                    return Err(Error::Config("k-NN k must be at least 1".into()));
                }
                ClassifierConfig::Knn { k }
            }
            "logreg" => {
                let d = LogRegConfig::default();
                ClassifierConfig::Logreg(LogRegConfig {
                    epochs: file.pick(args.epochs, "epochs")?.unwrap_or(d.epochs),
                    learning_rate: file.pick(args.lr, "lr")?.unwrap_or(d.learning_rate),
                    l2: file.pick(args.l2, "l2")?.unwrap_or(d.l2),
                })
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown classifier `{other}` (expected knn or logreg)"
                )))
            }
        };
        Ok(Self {
            features: file.pick(args.features.clone(), "features")?,
            features_b: file.pick(args.features_b.clone(), "features_b")?,
            manifest: file.pick(args.manifest.clone(), "manifest")?,
            k,
            t,
            classes: file.pick(args.classes, "classes")?,
            classifier,
            splits,
            seed: file.pick(args.seed, "seed")?.unwrap_or(0),
            out: file
                .pick(args.out.clone(), "out")?
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(&CommonArgs::default(), &ConfigFile::default()).unwrap();
        assert_eq!(c.k, KSpec::Fraction(0.1));
        assert_eq!(c.t, 3000);
        assert_eq!(c.splits, 10);
        assert_eq!(c.classifier, ClassifierConfig::Knn { k: 5 });
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigFile::parse("t = 50\nk = 7 # count\nclassifier = logreg\nepochs=3\n").unwrap();
        let args = CommonArgs {
            t: Some(9),
            ..Default::default()
        };
        let c = RunConfig::resolve(&args, &file).unwrap();
        assert_eq!(c.t, 9);
        assert_eq!(c.k, KSpec::Count(7));
        match c.classifier {
            ClassifierConfig::Logreg(cfg) => assert_eq!(cfg.epochs, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ConfigFile::parse("bogus = 1\n").is_err());
        assert!(ConfigFile::parse("just text\n").is_err());
        let file = ConfigFile::parse("t = x\n").unwrap();
        assert!(RunConfig::resolve(&CommonArgs::default(), &file).is_err());
        let args = CommonArgs {
            classifier: Some("svm".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&args, &ConfigFile::default()).is_err());
        let args = CommonArgs {
            k: Some("2.5".into()),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&args, &ConfigFile::default()).is_err());
    }
}
