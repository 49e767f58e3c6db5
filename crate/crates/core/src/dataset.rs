//! Labeled feature matrices: loading, validation, concatenation and
//! provenance tagging.
//!
//! Features are stored column-major since every hot loop in ranking and
//! selection scans one feature column at a time.
//!
//! ## Text format
//!
//! ```text
//! # comment lines start with '#'
//! # class_count = 10
//! m_1,m_2,o_1,label
//! 0.5,1.25,0,3
//! ```
//!
//! Exactly one column is named `label` and holds non-negative integers; every
//! other column is a decimal real. A `# class_count = N` comment overrides the
//! default class count of `1 + max(label)`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const LABEL_COLUMN: &str = "label";
pub const UNKNOWN_TAG: &str = "unknown";
const CLASS_COUNT_DIRECTIVE: &str = "class_count";

/// Maps feature-name prefixes to provenance block tags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProvenanceManifest {
    entries: Vec<(String, String)>,
}

impl ProvenanceManifest {
    pub fn new<I, P, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, T)>,
        P: Into<String>,
        T: Into<String>,
    {
        let entries: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(p, t)| (p.into(), t.into()))
            .collect();
        for (i, (prefix, tag)) in entries.iter().enumerate() {
            if prefix.is_empty() {
                return Err(Error::Schema("manifest prefix must be non-empty".into()));
            }
            if tag.is_empty() {
                return Err(Error::Schema(format!("manifest tag for `{prefix}` is empty")));
            }
            for (other, _) in &entries[i + 1..] {
                if other.starts_with(prefix.as_str()) || prefix.starts_with(other.as_str()) {
                    return Err(Error::Schema(format!(
                        "manifest prefixes `{prefix}` and `{other}` overlap"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Parses `prefix = tag` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (prefix, tag) = line.split_once('=').ok_or_else(|| {
                Error::Schema(format!("manifest line {} is not `prefix = tag`", lineno + 1))
            })?;
            pairs.push((prefix.trim().to_string(), tag.trim().to_string()));
        }
        Self::new(pairs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tag of the longest matching prefix, or `"unknown"`.
    pub fn tag_for(&self, name: &str) -> &str {
        self.entries
            .iter()
            .filter(|(prefix, _)| name.starts_with(prefix.as_str()))
            .max_by_key(|(prefix, _)| prefix.len())
            .map(|(_, tag)| tag.as_str())
            .unwrap_or(UNKNOWN_TAG)
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(p, t)| format!("{p} = {t}\n"))
            .collect()
    }
}

/// Dense feature matrix (samples x features) with class labels and
/// per-feature provenance. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    sample_count: usize,
    /// Column-major: feature `j` occupies `values[j * sample_count..(j + 1) * sample_count]`.
    values: Vec<f64>,
    labels: Vec<usize>,
    class_count: usize,
    feature_names: Vec<String>,
    provenance: Vec<String>,
}

impl LabeledDataset {
    /// Builds a dataset from feature columns.
    ///
    /// `class_count` defaults to `1 + max(label)`. Zero columns are allowed so
    /// that a labels-only dataset can act as the identity of [`concatenate`].
    pub fn new(
        columns: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_count: Option<usize>,
        feature_names: Vec<String>,
        provenance: Vec<String>,
    ) -> Result<Self> {
        let sample_count = labels.len();
        if sample_count == 0 {
            return Err(Error::Schema("dataset has no samples".into()));
        }
        if feature_names.len() != columns.len() || provenance.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} columns but {} names and {} provenance tags",
                columns.len(),
                feature_names.len(),
                provenance.len()
            )));
        }
        let max_label = labels.iter().copied().max().unwrap_or(0);
        let class_count = match class_count {
            Some(c) if c <= max_label => {
                return Err(Error::Label {
                    row: labels.iter().position(|&l| l >= c).unwrap_or(0) + 1,
                    message: format!("label {max_label} not below class count {c}"),
                })
            }
            Some(c) => c,
            None => max_label + 1,
        };
        if class_count < 2 {
            return Err(Error::Schema(format!(
                "class count must be at least 2, got {class_count}"
            )));
        }
        let mut seen = HashSet::with_capacity(feature_names.len());
        for name in &feature_names {
            if name == LABEL_COLUMN {
                return Err(Error::Schema("feature may not be named `label`".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{name}`")));
            }
        }
        let mut values = Vec::with_capacity(columns.len() * sample_count);
        for (j, col) in columns.into_iter().enumerate() {
            if col.len() != sample_count {
                return Err(Error::Schema(format!(
                    "column `{}` has {} values, expected {sample_count}",
                    feature_names[j],
                    col.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite value in column `{}` at row {}",
                    feature_names[j],
                    i + 1
                )));
            }
            values.extend(col);
        }
        Ok(Self {
            sample_count,
            values,
            labels,
            class_count,
            feature_names,
            provenance,
        })
    }

    /// Columns named `f0, f1, ...`, all tagged `"unknown"`.
    pub fn from_columns(columns: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let d = columns.len();
        Self::new(
            columns,
            labels,
            None,
            (0..d).map(|j| format!("f{j}")).collect(),
            vec![UNKNOWN_TAG.to_string(); d],
        )
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn column(&self, feature: usize) -> &[f64] {
        let start = feature * self.sample_count;
        &self.values[start..start + self.sample_count]
    }

    pub fn value(&self, sample: usize, feature: usize) -> f64 {
        self.values[feature * self.sample_count + sample]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    /// Columns carrying the given provenance tag, in column order.
    pub fn features_tagged(&self, tag: &str) -> Vec<usize> {
        self.provenance
            .iter()
            .enumerate()
            .filter(|(_, t)| t.as_str() == tag)
            .map(|(j, _)| j)
            .collect()
    }

    /// Distinct provenance tags in order of first appearance.
    pub fn blocks(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for tag in &self.provenance {
            if !out.contains(tag) {
                out.push(tag.clone());
            }
        }
        out
    }

    /// Same dataset with provenance re-derived from `manifest`.
    pub fn with_manifest(mut self, manifest: &ProvenanceManifest) -> Self {
        self.provenance = self
            .feature_names
            .iter()
            .map(|n| manifest.tag_for(n).to_string())
            .collect();
        self
    }

    pub fn with_provenance(mut self, provenance: Vec<String>) -> Result<Self> {
        if provenance.len() != self.feature_count() {
            return Err(Error::Schema(format!(
                "{} provenance tags for {} features",
                provenance.len(),
                self.feature_count()
            )));
        }
        self.provenance = provenance;
        Ok(self)
    }

    /// Rows `rows` in the given order; class count is kept.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.sample_count) {
            return Err(Error::Index {
                index: bad,
                count: self.sample_count,
            });
        }
        let columns = (0..self.feature_count())
            .map(|j| {
                let col = self.column(j);
                rows.iter().map(|&r| col[r]).collect()
            })
            .collect();
        Self::new(
            columns,
            rows.iter().map(|&r| self.labels[r]).collect(),
            Some(self.class_count),
            self.feature_names.clone(),
            self.provenance.clone(),
        )
    }

    /// Columns `features` in the given order.
    pub fn select_columns(&self, features: &[usize]) -> Result<Self> {
        let d = self.feature_count();
        if let Some(&bad) = features.iter().find(|&&j| j >= d) {
            return Err(Error::Index { index: bad, count: d });
        }
        Self::new(
            features.iter().map(|&j| self.column(j).to_vec()).collect(),
            self.labels.clone(),
            Some(self.class_count),
            features.iter().map(|&j| self.feature_names[j].clone()).collect(),
            features.iter().map(|&j| self.provenance[j].clone()).collect(),
        )
    }
}

/// Loading knobs beyond the file itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Takes precedence over a `# class_count` directive in the file.
    pub class_count: Option<usize>,
}

pub fn load_dataset(path: impl AsRef<Path>, manifest: &ProvenanceManifest) -> Result<LabeledDataset> {
    load_dataset_with(path, manifest, LoadOptions::default())
}

pub fn load_dataset_with(
    path: impl AsRef<Path>,
    manifest: &ProvenanceManifest,
    options: LoadOptions,
) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file), manifest, options)
}

pub fn read_dataset<R: Read>(
    reader: R,
    manifest: &ProvenanceManifest,
    options: LoadOptions,
) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut label_col = 0;
    let mut directive_classes: Option<usize> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut row = 0usize;

    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            row: row + 1,
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let first = record.get(0).unwrap_or("");
        if first.starts_with('#') {
            let text = record.iter().collect::<Vec<_>>().join(",");
            if let Some(n) = parse_class_directive(&text, line)? {
                directive_classes = Some(n);
            }
            continue;
        }
        if record.len() == 1 && first.is_empty() {
            continue;
        }

        let Some(names) = header.as_ref() else {
            let names: Vec<String> = record.iter().map(str::to_string).collect();
            let label_positions: Vec<usize> = names
                .iter()
                .enumerate()
                .filter(|(_, n)| n.as_str() == LABEL_COLUMN)
                .map(|(i, _)| i)
                .collect();
            if label_positions.len() != 1 {
                return Err(Error::Schema(format!(
                    "header must contain exactly one `label` column, found {}",
                    label_positions.len()
                )));
            }
            label_col = label_positions[0];
            if names.len() < 2 {
                return Err(Error::Schema("header has no feature columns".into()));
            }
            columns = vec![Vec::new(); names.len() - 1];
            header = Some(names);
            continue;
        };

        row += 1;
        if record.len() != names.len() {
            return Err(Error::Parse {
                row,
                line,
                message: format!("expected {} fields, found {}", names.len(), record.len()),
            });
        }
        let mut feature = 0;
        for (i, field) in record.iter().enumerate() {
            if i == label_col {
                labels.push(parse_label(field, row)?);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                line,
                message: format!("non-numeric value `{field}` in column `{}`", names[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    line,
                    message: format!("non-finite value `{field}` in column `{}`", names[i]),
                });
            }
            columns[feature].push(v);
            feature += 1;
        }
    }

    let names = header.ok_or_else(|| Error::Schema("missing header line".into()))?;
    let feature_names: Vec<String> = names
        .into_iter()
        .enumerate()
        .filter(|&(i, _)| i != label_col)
        .map(|(_, n)| n)
        .collect();
    let provenance = feature_names
        .iter()
        .map(|n| manifest.tag_for(n).to_string())
        .collect();
    LabeledDataset::new(
        columns,
        labels,
        options.class_count.or(directive_classes),
        feature_names,
        provenance,
    )
}

fn parse_label(field: &str, row: usize) -> Result<usize> {
    field.parse::<usize>().map_err(|_| Error::Label {
        row,
        message: format!("`{field}` is not a non-negative integer"),
    })
}

fn parse_class_directive(comment: &str, line: u64) -> Result<Option<usize>> {
    let body = comment.trim_start_matches('#').trim();
    let Some((key, value)) = body.split_once('=') else {
        return Ok(None);
    };
    if key.trim() != CLASS_COUNT_DIRECTIVE {
        return Ok(None);
    }
    value
        .trim()
        .parse()
        .map(Some)
        .map_err(|_| Error::Parse {
            row: 0,
            line,
            message: format!("bad class_count directive `{}`", value.trim()),
        })
}

/// Writes the text format. Values use Rust's shortest round-trip formatting,
/// so reading the output back reproduces every value bit-for-bit.
pub fn write_dataset<W: Write>(ds: &LabeledDataset, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# {CLASS_COUNT_DIRECTIVE} = {}", ds.class_count)?;
    let mut line = String::new();
    for name in &ds.feature_names {
        line.push_str(name);
        line.push(',');
    }
    line.push_str(LABEL_COLUMN);
    writeln!(out, "{line}")?;
    for i in 0..ds.sample_count {
        line.clear();
        for j in 0..ds.feature_count() {
            line.push_str(&format!("{},", ds.value(i, j)));
        }
        line.push_str(&ds.labels[i].to_string());
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_dataset(ds, &mut buf).map_err(|e| Error::io(path, e))?;
    crate::write_atomic(path, &buf)
}

/// Columns of `a` followed by columns of `b`.
pub fn concatenate(a: &LabeledDataset, b: &LabeledDataset) -> Result<LabeledDataset> {
    if a.sample_count != b.sample_count {
        return Err(Error::Alignment {
            row: a.sample_count.min(b.sample_count) + 1,
        });
    }
    if let Some(row) = a.labels.iter().zip(&b.labels).position(|(x, y)| x != y) {
        return Err(Error::Alignment { row: row + 1 });
    }
    if a.class_count != b.class_count {
        return Err(Error::Schema(format!(
            "class counts differ: {} vs {}",
            a.class_count, b.class_count
        )));
    }
    let names_a: HashSet<&str> = a.feature_names.iter().map(String::as_str).collect();
    if let Some(dup) = b.feature_names.iter().find(|n| names_a.contains(n.as_str())) {
        return Err(Error::Schema(format!("feature name `{dup}` present in both inputs")));
    }
    let mut values = a.values.clone();
    values.extend_from_slice(&b.values);
    let mut feature_names = a.feature_names.clone();
    feature_names.extend_from_slice(&b.feature_names);
    let mut provenance = a.provenance.clone();
    provenance.extend_from_slice(&b.provenance);
    Ok(LabeledDataset {
        sample_count: a.sample_count,
        values,
        labels: a.labels.clone(),
        class_count: a.class_count,
        feature_names,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, manifest: &ProvenanceManifest) -> Result<LabeledDataset> {
        read_dataset(text.as_bytes(), manifest, LoadOptions::default())
    }

    #[test]
    fn loads_small_file() {
        let ds = read("f1,f2,label\n1,2,0\n3,4,1\n5,6,0\n", &ProvenanceManifest::default()).unwrap();
        assert_eq!(ds.sample_count(), 3);
        assert_eq!(ds.feature_count(), 2);
        assert_eq!(ds.class_count(), 2);
        assert_eq!(ds.column(1), &[2.0, 4.0, 6.0]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
    }

    #[test]
    fn wrong_field_count_names_the_row() {
        let err = read("f1,f2,label\n1,2,0\n3,4,5,1\n", &ProvenanceManifest::default()).unwrap_err();
        match err {
            Error::Parse { row, line, .. } => {
                assert_eq!(row, 2);
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(read("f1,f2,label\n1,2,0\n3,4,5,1\n", &ProvenanceManifest::default())
            .unwrap_err()
            .to_string()
            .contains("row 2"));
    }

    #[test]
    fn bad_values_and_labels() {
        let m = ProvenanceManifest::default();
        assert!(matches!(read("a,label\nx,0\n", &m), Err(Error::Parse { .. })));
        assert!(matches!(read("a,label\n1,-1\n", &m), Err(Error::Label { row: 1, .. })));
        assert!(matches!(read("a,label\n1,0.5\n", &m), Err(Error::Label { .. })));
        assert!(matches!(read("a,a,label\n1,1,0\n2,2,1\n", &m), Err(Error::Schema(_))));
        assert!(matches!(read("a,b\n1,0\n", &m), Err(Error::Schema(_))));
        assert!(matches!(read("a,label,label\n1,0,0\n", &m), Err(Error::Schema(_))));
        assert!(matches!(read("a,label\nNaN,0\n", &m), Err(Error::Parse { .. })));
    }

    #[test]
    fn provenance_by_prefix() {
        let m = ProvenanceManifest::parse("m_ = material\no_ = object\n").unwrap();
        let ds = read("m_1,m_2,o_1,label\n1,2,3,0\n1,2,3,1\n", &m).unwrap();
        assert_eq!(ds.provenance(), &["material", "material", "object"]);
        let ds = read("m_1,x,label\n1,2,0\n1,2,1\n", &m).unwrap();
        assert_eq!(ds.provenance()[1], UNKNOWN_TAG);
    }

    #[test]
    fn overlapping_prefixes_rejected() {
        assert!(ProvenanceManifest::parse("m = a\nm_ = b\n").is_err());
        assert!(ProvenanceManifest::parse(" = a\n").is_err());
        assert!(ProvenanceManifest::parse("garbage\n").is_err());
    }

    #[test]
    fn comments_and_class_count() {
        let m = ProvenanceManifest::default();
        let ds = read("# hello, world\n# class_count = 5\na,label\n1,0\n2,1\n", &m).unwrap();
        assert_eq!(ds.class_count(), 5);
        let ds = read_dataset(
            "a,label\n1,0\n2,1\n".as_bytes(),
            &m,
            LoadOptions { class_count: Some(4) },
        )
        .unwrap();
        assert_eq!(ds.class_count(), 4);
        assert!(read_dataset(
            "a,label\n1,0\n2,3\n".as_bytes(),
            &m,
            LoadOptions { class_count: Some(3) },
        )
        .is_err());
    }

    #[test]
    fn concatenation() {
        let a = LabeledDataset::from_columns(vec![vec![1.0, 3.0], vec![2.0, 4.0]], vec![0, 1]).unwrap();
        let b = LabeledDataset::new(
            vec![vec![5.0, 6.0]],
            vec![0, 1],
            None,
            vec!["g0".into()],
            vec!["object".into()],
        )
        .unwrap();
        let c = concatenate(&a, &b).unwrap();
        assert_eq!(c.feature_count(), 3);
        for (i, row) in [[1.0, 2.0, 5.0], [3.0, 4.0, 6.0]].iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(c.value(i, j), *v);
            }
        }
        assert_eq!(c.provenance()[2], "object");

        let swapped = LabeledDataset::from_columns(vec![vec![5.0, 6.0]], vec![1, 0]).unwrap();
        assert!(matches!(concatenate(&a, &swapped), Err(Error::Alignment { row: 1 })));
        assert!(matches!(concatenate(&a, &a), Err(Error::Schema(_))));

        let empty = LabeledDataset::from_columns(vec![], vec![0, 1]).unwrap();
        assert_eq!(concatenate(&a, &empty).unwrap(), a);
    }

    #[test]
    fn round_trip_text() {
        let a = LabeledDataset::from_columns(
            vec![vec![0.1, -2.5e-7, 3.0], vec![1e300, 0.0, -0.3333333333333333]],
            vec![2, 0, 1],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dataset(&a, &mut buf).unwrap();
        let b = read_dataset(buf.as_slice(), &ProvenanceManifest::default(), LoadOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subsets() {
        let a = LabeledDataset::from_columns(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], vec![0, 1, 2])
            .unwrap();
        let s = a.subset_rows(&[2, 0]).unwrap();
        assert_eq!(s.column(1), &[6.0, 4.0]);
        assert_eq!(s.labels(), &[2, 0]);
        assert_eq!(s.class_count(), 3);
        let c = a.select_columns(&[1]).unwrap();
        assert_eq!(c.feature_names(), &["f1"]);
        assert!(a.select_columns(&[2]).is_err());
    }
}
