//! Multi-class random forest over occurrence-count vectors.

mod cv;
mod dataset;
mod gain;
mod persist;
mod rank;
mod tree;

pub use cv::{best_row, cv_accuracy, cv_table, select_n_trees, stratified_folds, CvRow, CV_FOLDS};
pub use dataset::{Label, LabeledDataset, Sample};
pub use gain::{best_split, entropy, feature_gains, information_gain, Split, GAIN_TIE_EPS};
pub use persist::{load_model, model_from_json, model_to_json, save_model, FORMAT_NAME, FORMAT_VERSION};
pub use rank::rank_features;
pub use tree::{Node, Tree};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureVector;
use crate::reference::Fingerprint;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("entropy of an empty set")]
    EmptySet,
    #[error("no split with positive information gain")]
    NoUsefulSplit,
    #[error("training data must contain at least two classes")]
    SingleClassData,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("reference fingerprint mismatch: expected {expected}, found {found}")]
    FingerprintMismatch { expected: Fingerprint, found: Fingerprint },
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("model format version {found} is not supported (this build reads {supported})")]
    VersionMismatch { found: u64, supported: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperParams {
    pub n_trees: usize,
    /// `None` grows until purity.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// `None` means ceil(sqrt(d)).
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: None,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn with_trees(self, n_trees: usize) -> Self {
        HyperParams { n_trees, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        HyperParams { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::InvalidHyperparams("n_trees must be at least 1".into()));
        }
        if self.features_per_split == Some(0) {
            return Err(ForestError::InvalidHyperparams("features_per_split must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(ForestError::InvalidHyperparams("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn features_per_split_for(&self, dim: usize) -> usize {
        let k = self
            .features_per_split
            .unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize);
        k.clamp(1, dim.max(1)).min(dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<Tree>,
    pub class_order: [Label; 3],
    pub hyperparams: HyperParams,
    pub reference_fingerprint: Fingerprint,
    pub n_features: usize,
    /// Mean over trees of the share-weighted gain of splits on each feature.
    pub feature_importance: Vec<f64>,
}

/// Grow `hp.n_trees` trees on bootstrap resamples of `data`.
pub fn train_forest(data: &LabeledDataset, hp: &HyperParams) -> Result<RandomForestModel, ForestError> {
    hp.validate()?;
    if data.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
        return Err(ForestError::SingleClassData);
    }
    let m = data.matrix();
    let grown: Vec<tree::Grown> = (0..hp.n_trees).into_par_iter().map(|t| tree::grow(&m, hp, t)).collect();
    let mut importance = vec![0.0; data.dim()];
    for g in &grown {
        for (acc, v) in importance.iter_mut().zip(&g.importance) {
            *acc += v;
        }
    }
    for v in &mut importance {
        *v /= hp.n_trees as f64;
    }
    Ok(RandomForestModel {
        trees: grown.into_iter().map(|g| g.tree).collect(),
        class_order: Label::ALL,
        hyperparams: *hp,
        reference_fingerprint: data.fingerprint(),
        n_features: data.dim(),
        feature_importance: importance,
    })
}

/// Train a single tree exactly as [`train_forest`] grows tree `tree_index`,
/// also returning its bootstrap row indices.
pub fn grow_tree(data: &LabeledDataset, hp: &HyperParams, tree_index: usize) -> (Tree, Vec<usize>) {
    let g = tree::grow(&data.matrix(), hp, tree_index);
    (g.tree, g.bootstrap)
}

impl RandomForestModel {
    pub fn check(&self, fv: &FeatureVector) -> Result<(), ForestError> {
        if fv.reference_fingerprint != self.reference_fingerprint {
            return Err(ForestError::FingerprintMismatch {
                expected: self.reference_fingerprint,
                found: fv.reference_fingerprint,
            });
        }
        if fv.len() != self.n_features {
            return Err(ForestError::DimensionMismatch {
                expected: self.n_features,
                found: fv.len(),
            });
        }
        Ok(())
    }

    /// Mean leaf distribution over all trees, in [`Label::ALL`] order.
    pub fn predict_proba(&self, fv: &FeatureVector) -> Result<[f64; 3], ForestError> {
        self.check(fv)?;
        Ok(self.proba_counts(&fv.counts))
    }

    pub(crate) fn proba_counts(&self, x: &[u32]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for t in &self.trees {
            let d = t.leaf(x);
            for k in 0..3 {
                p[k] += d[k];
            }
        }
        p.map(|v| v / self.trees.len() as f64)
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<Label, ForestError> {
        Ok(argmax(&self.predict_proba(fv)?))
    }

    /// Feature indices by descending importance, ties by index.
    pub fn ranked_features(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.n_features).collect();
        idx.sort_by(|&a, &b| {
            self.feature_importance[b]
                .total_cmp(&self.feature_importance[a])
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Highest-probability label; ties go to the earlier label.
pub fn argmax(p: &[f64; 3]) -> Label {
    let mut best = 0;
    for k in 1..3 {
        if p[k] > p[best] {
            best = k;
        }
    }
    Label::ALL[best]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_go_to_class_order() {
        assert_eq!(argmax(&[0.5, 0.2, 0.3]), Label::Trusted);
        assert_eq!(argmax(&[0.5, 0.5, 0.0]), Label::Trusted);
        assert_eq!(argmax(&[0.1, 0.2, 0.7]), Label::Ransomware);
        assert_eq!(argmax(&[0.0, 0.5, 0.5]), Label::GenericMalware);
    }

    #[test]
    fn features_per_split_default_is_ceil_sqrt() {
        let hp = HyperParams::default();
        assert_eq!(hp.features_per_split_for(200), 15);
        assert_eq!(hp.features_per_split_for(16), 4);
        assert_eq!(hp.features_per_split_for(1), 1);
        let hp = HyperParams {
            features_per_split: Some(50),
            ..hp
        };
        assert_eq!(hp.features_per_split_for(3), 3);
    }
}
