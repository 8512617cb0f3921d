use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, train_forest, ForestError, HyperParams, Label, LabeledDataset};

pub const CV_FOLDS: usize = 10;

/// Split row indices into `k` folds with per-class proportions preserved.
/// Each class is shuffled and dealt round-robin, continuing the deal from
/// where the previous class stopped so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in Label::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub n_trees: usize,
    pub mean_accuracy: f64,
}

/// Mean accuracy over stratified `k`-fold cross-validation.
pub fn cv_accuracy(data: &LabeledDataset, hp: &HyperParams, k: usize) -> Result<f64, ForestError> {
    if data.len() < k {
        return Err(ForestError::TooFewSamples {
            needed: k,
            found: data.len(),
        });
    }
    let labels: Vec<Label> = data.samples().iter().map(|s| s.label).collect();
    let folds = stratified_folds(&labels, k, hp.seed ^ 0x5eed_f01d);
    let mut total = 0.0;
    for (fi, test) in folds.iter().enumerate() {
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(fj, _)| fj != fi)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let train = data.subset(&train);
        let counts = train.class_counts();
        // A fold whose training part is single-class predicts that class.
        let model = match train_forest(&train, hp) {
            Ok(m) => Some(m),
            Err(ForestError::SingleClassData) => None,
            Err(e) => return Err(e),
        };
        let correct = test
            .iter()
            .filter(|&&i| {
                let s = &data.samples()[i];
                let predicted = match &model {
                    Some(m) => argmax(&m.proba_counts(&s.features.counts)),
                    None => Label::ALL[counts.iter().position(|&c| c > 0).unwrap_or(0)],
                };
                predicted == s.label
            })
            .count();
        total += correct as f64 / test.len() as f64;
    }
    Ok(total / k as f64)
}

/// Cross-validated accuracy for each distinct grid value, ascending.
pub fn cv_table(data: &LabeledDataset, grid: &[usize], hp: &HyperParams) -> Result<Vec<CvRow>, ForestError> {
    if grid.is_empty() {
        return Err(ForestError::InvalidHyperparams("empty n_trees grid".into()));
    }
    if data.len() < CV_FOLDS {
        return Err(ForestError::TooFewSamples {
            needed: CV_FOLDS,
            found: data.len(),
        });
    }
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    grid.into_iter()
        .map(|n| {
            Ok(CvRow {
                n_trees: n,
                mean_accuracy: cv_accuracy(data, &hp.with_trees(n), CV_FOLDS)?,
            })
        })
        .collect()
}

/// The grid value with the highest mean 10-fold accuracy; ties go to the
/// smaller value.
pub fn select_n_trees(data: &LabeledDataset, grid: &[usize], hp: &HyperParams) -> Result<usize, ForestError> {
    Ok(best_row(&cv_table(data, grid, hp)?).n_trees)
}

/// Row with the highest mean accuracy; ties go to the earlier row.
pub fn best_row(table: &[CvRow]) -> CvRow {
    let mut best = table[0];
    for row in &table[1..] {
        if row.mean_accuracy > best.mean_accuracy {
            best = *row;
        }
    }
    best
}
