use super::gain::feature_gains;
use super::{ForestError, LabeledDataset};

/// Features ordered by mean best-threshold information gain across
/// `datasets`, descending; ties by lower index.
pub fn rank_features(datasets: &[LabeledDataset]) -> Result<Vec<(usize, f64)>, ForestError> {
    let Some(first) = datasets.first() else {
        return Ok(Vec::new());
    };
    for d in &datasets[1..] {
        if d.fingerprint() != first.fingerprint() {
            return Err(ForestError::FingerprintMismatch {
                expected: first.fingerprint(),
                found: d.fingerprint(),
            });
        }
    }
    let mut mean = vec![0.0; first.dim()];
    for (k, d) in datasets.iter().enumerate() {
        // Running mean: identical inputs reproduce the input exactly.
        for (m, g) in mean.iter_mut().zip(feature_gains(d)) {
            *m += (g - *m) / (k + 1) as f64;
        }
    }
    let mut ranked: Vec<(usize, f64)> = mean.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}
