use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::forest::{Label, LabeledDataset};

/// Per-class shuffled split. Each class with n samples puts
/// `round(fraction * n)` of them in training, clamped so both sides keep at
/// least one sample when n >= 2. Returns ascending (train, test) indices.
pub fn stratified_split(labels: &[Label], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in Label::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        let mut k = (fraction * n as f64).round() as usize;
        if n >= 2 {
            k = k.clamp(1, n - 1);
        }
        train.extend_from_slice(&idx[..k.min(n)]);
        test.extend_from_slice(&idx[k.min(n)..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Split a dataset; see [`stratified_split`].
pub fn split_dataset(data: &LabeledDataset, fraction: f64, seed: u64) -> (LabeledDataset, LabeledDataset) {
    let labels: Vec<Label> = data.samples().iter().map(|s| s.label).collect();
    let (tr, te) = stratified_split(&labels, fraction, seed);
    (data.subset(&tr), data.subset(&te))
}

/// Fail if any id is in both sets.
pub fn assert_disjoint(train: &LabeledDataset, test: &LabeledDataset) -> Result<(), EvalError> {
    let ids: HashSet<&str> = train.ids();
    if let Some(s) = test.samples().iter().find(|s| ids.contains(s.id.as_str())) {
        return Err(EvalError::ConfigError(format!("sample `{}` is in both training and test data", s.id)));
    }
    Ok(())
}
