//! Labeled CSV corpora, label mappings and distribution checks.
//!
//! Every dataset is a UTF-8 CSV with a header row. The text and label
//! column names are configurable; labels are lowercased and then mapped
//! through a [`LabelScheme`] into a fixed class order.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub text: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RejectedRow {
    /// Line of the record in the file, counting the header as line 1.
    pub line: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDataset {
    pub name: String,
    pub samples: Vec<Sample>,
    pub label_set: Vec<String>,
    pub class_counts: BTreeMap<String, usize>,
    pub rejected: Vec<RejectedRow>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, samples: Vec<Sample>, label_set: Vec<String>) -> Result<Self> {
        let mut class_counts: BTreeMap<String, usize> = label_set.iter().map(|l| (l.clone(), 0)).collect();
        for s in &samples {
            match class_counts.get_mut(&s.label) {
                Some(n) => *n += 1,
                None => {
                    return Err(Error::UnmappedLabel {
                        label: s.label.clone(),
                        scheme: label_set.join("/"),
                    })
                }
            }
        }
        Ok(LabeledDataset {
            name: name.into(),
            samples,
            label_set,
            class_counts,
            rejected: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Class index of every sample, following `label_set` order.
    pub fn label_indices(&self) -> Result<Vec<usize>> {
        self.samples
            .iter()
            .map(|s| {
                self.label_set.iter().position(|l| *l == s.label).ok_or_else(|| Error::UnmappedLabel {
                    label: s.label.clone(),
                    scheme: self.label_set.join("/"),
                })
            })
            .collect()
    }

    pub fn percentages(&self) -> BTreeMap<String, f64> {
        let n = self.len().max(1) as f64;
        self.class_counts.iter().map(|(k, &v)| (k.clone(), 100.0 * v as f64 / n)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelScheme {
    /// negative / neutral / positive
    Polarity3,
    /// negative / positive
    Polarity2,
    /// love, joy → positive; anger, sadness → negative
    JiraEmotions,
    /// negative stays; neutral and positive merge into non-negative
    Gerrit,
}

impl LabelScheme {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "polarity3" => Ok(LabelScheme::Polarity3),
            "polarity2" => Ok(LabelScheme::Polarity2),
            "jira-emotions" => Ok(LabelScheme::JiraEmotions),
            "gerrit" => Ok(LabelScheme::Gerrit),
            other => Err(Error::Config(format!(
                "unknown label mapping {other:?} (expected polarity3, polarity2, jira-emotions or gerrit)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LabelScheme::Polarity3 => "polarity3",
            LabelScheme::Polarity2 => "polarity2",
            LabelScheme::JiraEmotions => "jira-emotions",
            LabelScheme::Gerrit => "gerrit",
        }
    }

    /// Canonical class order; indices into this list are the class indices.
    pub fn classes(self) -> Vec<String> {
        let names: &[&str] = match self {
            LabelScheme::Polarity3 => &["negative", "neutral", "positive"],
            LabelScheme::Polarity2 | LabelScheme::JiraEmotions => &["negative", "positive"],
            LabelScheme::Gerrit => &["negative", "non-negative"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Maps an already lowercased raw label to its canonical class.
    pub fn map(self, label: &str) -> Result<&'static str> {
        let unmapped = || Error::UnmappedLabel {
            label: label.to_owned(),
            scheme: self.name().to_owned(),
        };
        match self {
            LabelScheme::JiraEmotions => map_jira_emotions(label),
            LabelScheme::Polarity3 => match label {
                "negative" => Ok("negative"),
                "neutral" => Ok("neutral"),
                "positive" => Ok("positive"),
                _ => Err(unmapped()),
            },
            LabelScheme::Polarity2 => match label {
                "negative" => Ok("negative"),
                "positive" => Ok("positive"),
                _ => Err(unmapped()),
            },
            LabelScheme::Gerrit => match label {
                "negative" => Ok("negative"),
                "neutral" | "positive" | "non-negative" => Ok("non-negative"),
                _ => Err(unmapped()),
            },
        }
    }
}

pub fn map_jira_emotions(label: &str) -> Result<&'static str> {
    match label {
        "love" | "joy" => Ok("positive"),
        "anger" | "sadness" => Ok("negative"),
        _ => Err(Error::UnmappedLabel {
            label: label.to_owned(),
            scheme: "jira-emotions".to_owned(),
        }),
    }
}

/// Reads `path`, rejecting rows with blank text or a label the scheme does
/// not map. Rejected rows are kept in [`LabeledDataset::rejected`]; a file
/// with no accepted rows is an error.
pub fn load_csv(
    path: impl AsRef<Path>,
    text_column: &str,
    label_column: &str,
    scheme: LabelScheme,
) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let csv_error = |e: csv::Error| -> Error {
        let line = e.position().map_or(0, |p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            kind => Error::ParseLine {
                path: path.to_owned(),
                line: line as usize,
                msg: format!("{kind:?}"),
            },
        }
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(csv_error)?;
    let headers = reader.headers().map_err(csv_error)?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::ParseLine {
            path: path.to_owned(),
            line: 1,
            msg: format!("missing column {name:?}"),
        })
    };
    let text_idx = column(text_column)?;
    let label_idx = column(label_column)?;

    let mut samples = Vec::new();
    let mut rejected = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let text = record.get(text_idx).unwrap_or("");
        let raw_label = record.get(label_idx).unwrap_or("").trim().to_lowercase();
        if text.trim().is_empty() {
            rejected.push(RejectedRow {
                line,
                reason: "empty text".into(),
            });
            continue;
        }
        match scheme.map(&raw_label) {
            Ok(label) => samples.push(Sample {
                text: text.to_owned(),
                label: label.to_owned(),
            }),
            Err(_) => rejected.push(RejectedRow {
                line,
                reason: format!("unmapped label {raw_label:?}"),
            }),
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset(path.to_owned()));
    }
    let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let mut ds = LabeledDataset::new(name, samples, scheme.classes())?;
    ds.rejected = rejected;
    Ok(ds)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassDeviation {
    pub label: String,
    pub expected: f64,
    pub observed: f64,
    /// `observed - expected`, in percentage points.
    pub deviation: f64,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistributionReport {
    pub classes: Vec<ClassDeviation>,
    pub tolerance: f64,
}

impl DistributionReport {
    pub fn ok(&self) -> bool {
        self.classes.iter().all(|c| c.within_tolerance)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.classes
            .iter()
            .filter(|c| !c.within_tolerance)
            .map(|c| {
                format!(
                    "class {} is {:.1}% of the data, expected {:.1}% (±{})",
                    c.label, c.observed, c.expected, self.tolerance
                )
            })
            .collect()
    }
}

pub const DISTRIBUTION_TOLERANCE: f64 = 0.5;

/// Compares observed class percentages with `expected` (in percent).
/// Deviations are reported, never enforced.
pub fn verify_distribution(
    ds: &LabeledDataset,
    expected: &BTreeMap<String, f64>,
    tolerance: f64,
) -> Result<DistributionReport> {
    let total: f64 = expected.values().sum();
    if (total - 100.0).abs() > tolerance {
        return Err(Error::Config(format!("expected distribution sums to {total}, not 100")));
    }
    let observed = ds.percentages();
    let classes = expected
        .iter()
        .map(|(label, &e)| {
            let o = observed.get(label).copied().unwrap_or(0.0);
            ClassDeviation {
                label: label.clone(),
                expected: e,
                observed: o,
                deviation: o - e,
                within_tolerance: (o - e).abs() <= tolerance + 1e-9,
            }
        })
        .collect();
    Ok(DistributionReport { classes, tolerance })
}

/// Per-dataset settings, read from a TOML file. `path` is resolved
/// relative to the config file.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_text_column")]
    pub text_column: String,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    pub label_mapping: LabelScheme,
    #[serde(default)]
    pub expected_size: Option<usize>,
    /// Class label → percentage.
    #[serde(default)]
    pub expected: BTreeMap<String, f64>,
}

fn default_text_column() -> String {
    "text".into()
}

fn default_label_column() -> String {
    "label".into()
}

impl DatasetConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: DatasetConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if config.path.is_relative() {
            if let Some(dir) = path.parent() {
                config.path = dir.join(&config.path);
            }
        }
        Ok(config)
    }

    pub fn load(&self) -> Result<LabeledDataset> {
        let mut ds = load_csv(&self.path, &self.text_column, &self.label_column, self.label_mapping)?;
        ds.name = self.name.clone();
        Ok(ds)
    }

    pub fn check(&self, ds: &LabeledDataset) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if let Some(n) = self.expected_size {
            if n != ds.len() {
                warnings.push(format!("{} samples loaded, expected {n}", ds.len()));
            }
        }
        if !self.expected.is_empty() {
            warnings.extend(verify_distribution(ds, &self.expected, DISTRIBUTION_TOLERANCE)?.warnings());
        }
        Ok(warnings)
    }
}

/// Published size and class mix of a known dataset, in percent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetPreset {
    pub name: &'static str,
    pub size: usize,
    pub scheme: LabelScheme,
    pub distribution: &'static [(&'static str, f64)],
}

impl DatasetPreset {
    pub fn expected(&self) -> BTreeMap<String, f64> {
        self.distribution.iter().map(|&(k, v)| (k.to_owned(), v)).collect()
    }
}

pub const PRESETS: &[DatasetPreset] = &[
    DatasetPreset {
        name: "app-reviews",
        size: 341,
        scheme: LabelScheme::Polarity3,
        distribution: &[("positive", 54.5), ("neutral", 7.3), ("negative", 38.2)],
    },
    DatasetPreset {
        name: "jira",
        size: 926,
        scheme: LabelScheme::JiraEmotions,
        distribution: &[("positive", 31.3), ("negative", 68.7)],
    },
    DatasetPreset {
        name: "gerrit",
        size: 1600,
        scheme: LabelScheme::Gerrit,
        distribution: &[("non-negative", 75.0), ("negative", 25.0)],
    },
    DatasetPreset {
        name: "so-java-libraries",
        size: 1500,
        scheme: LabelScheme::Polarity3,
        distribution: &[("positive", 8.7), ("neutral", 79.4), ("negative", 11.9)],
    },
    DatasetPreset {
        name: "so-sentiments",
        size: 4423,
        scheme: LabelScheme::Polarity3,
        distribution: &[("positive", 34.5), ("neutral", 38.3), ("negative", 27.2)],
    },
];

pub fn preset(name: &str) -> Option<&'static DatasetPreset> {
    PRESETS.iter().find(|p| p.name == name)
}
