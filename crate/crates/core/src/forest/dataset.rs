use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::ForestError;
use crate::features::FeatureVector;
use crate::reference::Fingerprint;

/// Class labels, in the fixed order used for probability vectors and
/// tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Trusted,
    GenericMalware,
    Ransomware,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Trusted, Label::GenericMalware, Label::Ransomware];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    /// Manifest token: `trusted`, `malware` or `ransomware`.
    pub fn token(self) -> &'static str {
        match self {
            Label::Trusted => "trusted",
            Label::GenericMalware => "malware",
            Label::Ransomware => "ransomware",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Label {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "trusted" => Ok(Label::Trusted),
            "malware" => Ok(Label::GenericMalware),
            "ransomware" => Ok(Label::Ransomware),
            other => Err(format!("unknown label `{other}` (expected trusted, malware or ransomware)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub features: FeatureVector,
    pub label: Label,
    pub first_seen: NaiveDate,
}

/// Labeled samples sharing one reference list.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<Sample>,
    fingerprint: Fingerprint,
    dim: usize,
}

impl LabeledDataset {
    /// Validates that ids are unique and every vector was built against
    /// `fingerprint` with `dim` entries.
    pub fn new(fingerprint: Fingerprint, dim: usize, samples: Vec<Sample>) -> Result<Self, ForestError> {
        let mut seen = HashSet::new();
        for s in &samples {
            if s.features.reference_fingerprint != fingerprint {
                return Err(ForestError::FingerprintMismatch {
                    expected: fingerprint,
                    found: s.features.reference_fingerprint,
                });
            }
            if s.features.len() != dim {
                return Err(ForestError::DimensionMismatch {
                    expected: dim,
                    found: s.features.len(),
                });
            }
            if !seen.insert(s.id.as_str()) {
                return Err(ForestError::DuplicateId(s.id.clone()));
            }
        }
        Ok(LabeledDataset {
            samples,
            fingerprint,
            dim,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn fingerprint(&self) -> Fingerprint {
        self.fingerprint
    }

    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_counts(&self) -> [u64; 3] {
        let mut c = [0u64; 3];
        for s in &self.samples {
            c[s.label.index()] += 1;
        }
        c
    }

    /// The samples at `indices`, in that order. Indices must be distinct.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            fingerprint: self.fingerprint,
            dim: self.dim,
        }
    }

    pub fn filter(&self, mut keep: impl FnMut(&Sample) -> bool) -> LabeledDataset {
        LabeledDataset {
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
            fingerprint: self.fingerprint,
            dim: self.dim,
        }
    }

    /// Append samples, re-checking all invariants.
    pub fn extended(&self, more: impl IntoIterator<Item = Sample>) -> Result<LabeledDataset, ForestError> {
        let mut samples = self.samples.clone();
        samples.extend(more);
        LabeledDataset::new(self.fingerprint, self.dim, samples)
    }

    pub fn ids(&self) -> HashSet<&str> {
        self.samples.iter().map(|s| s.id.as_str()).collect()
    }

    pub(crate) fn matrix(&self) -> Matrix {
        Matrix::from_dataset(self)
    }
}

/// Row-major count matrix with labels, the training-time view of a dataset.
#[derive(Debug, Clone)]
pub(crate) struct Matrix {
    pub values: Vec<u32>,
    pub labels: Vec<u8>,
    pub dim: usize,
}

impl Matrix {
    fn from_dataset(data: &LabeledDataset) -> Matrix {
        let mut values = Vec::with_capacity(data.len() * data.dim);
        for s in &data.samples {
            values.extend_from_slice(&s.features.counts);
        }
        Matrix {
            values,
            labels: data.samples.iter().map(|s| s.label.index() as u8).collect(),
            dim: data.dim,
        }
    }

    #[inline]
    pub fn get(&self, row: usize, feature: usize) -> u32 {
        self.values[row * self.dim + feature]
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }
}
