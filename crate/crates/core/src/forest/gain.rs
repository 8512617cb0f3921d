//! Entropy and information gain over three-class label counts.

use super::dataset::{LabeledDataset, Matrix};
use super::ForestError;

/// Shannon entropy in bits of a label-count triple.
pub fn entropy(counts: [u64; 3]) -> Result<f64, ForestError> {
    if counts.iter().all(|&c| c == 0) {
        return Err(ForestError::EmptySet);
    }
    Ok(entropy_of(counts))
}

/// Like [`entropy`], with 0 for the empty set. Counts are summed in sorted
/// order so permuted triples give bit-identical results.
pub(crate) fn entropy_of(mut counts: [u64; 3]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    counts.sort_unstable();
    let n = n as f64;
    let mut h = 0.0;
    for c in counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.log2();
        }
    }
    h.max(0.0)
}

/// Gain of splitting a parent with entropy `h_parent` into `left`/`right`.
/// Zero when either side is empty.
pub(crate) fn split_gain(h_parent: f64, left: [u64; 3], right: [u64; 3]) -> f64 {
    let nl: u64 = left.iter().sum();
    let nr: u64 = right.iter().sum();
    if nl == 0 || nr == 0 {
        return 0.0;
    }
    let n = (nl + nr) as f64;
    let cond = (nl as f64 / n) * entropy_of(left) + (nr as f64 / n) * entropy_of(right);
    (h_parent - cond).max(0.0)
}

/// Entropy reduction from splitting `data` on `counts[feature] <= threshold`.
pub fn information_gain(data: &LabeledDataset, feature: usize, threshold: f64) -> f64 {
    let mut left = [0u64; 3];
    let mut right = [0u64; 3];
    for s in data.samples() {
        let side = if s.features.counts[feature] as f64 <= threshold {
            &mut left
        } else {
            &mut right
        };
        side[s.label.index()] += 1;
    }
    let mut total = left;
    for k in 0..3 {
        total[k] += right[k];
    }
    split_gain(entropy_of(total), left, right)
}

/// Gains closer than this are ties; it absorbs rounding differences between
/// count configurations whose exact gains are equal.
pub const GAIN_TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Best feature/threshold among `candidates`, trying midpoints between
/// consecutive distinct values. Ties go to the lower feature index, then the
/// lower threshold.
pub fn best_split(data: &LabeledDataset, candidates: &[usize]) -> Result<Split, ForestError> {
    let m = data.matrix();
    let rows: Vec<usize> = (0..m.rows()).collect();
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut scratch = Vec::new();
    best_split_rows(&m, &rows, &sorted, 1, &mut scratch).ok_or(ForestError::NoUsefulSplit)
}

/// Scan `features` (ascending) over the given rows. Both sides must keep at
/// least `min_leaf` rows. Returns `None` when no split has positive gain.
pub(crate) fn best_split_rows(
    m: &Matrix,
    rows: &[usize],
    features: &[usize],
    min_leaf: usize,
    scratch: &mut Vec<(u32, u8)>,
) -> Option<Split> {
    let mut total = [0u64; 3];
    for &r in rows {
        total[m.labels[r] as usize] += 1;
    }
    let h = entropy_of(total);
    if h == 0.0 {
        return None;
    }
    let n = rows.len();
    let mut best: Option<Split> = None;
    for &f in features {
        scratch.clear();
        scratch.extend(rows.iter().map(|&r| (m.get(r, f), m.labels[r])));
        scratch.sort_unstable_by_key(|&(v, _)| v);
        let mut left = [0u64; 3];
        for i in 0..n - 1 {
            left[scratch[i].1 as usize] += 1;
            let (v, next) = (scratch[i].0, scratch[i + 1].0);
            if v == next || i + 1 < min_leaf || n - i - 1 < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2]];
            let gain = split_gain(h, left, right);
            if gain > GAIN_TIE_EPS && best.is_none_or(|b| gain > b.gain + GAIN_TIE_EPS) {
                best = Some(Split {
                    feature: f,
                    threshold: (v as f64 + next as f64) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

/// Best-threshold gain of every feature on the full dataset (0 for features
/// with no useful split).
pub fn feature_gains(data: &LabeledDataset) -> Vec<f64> {
    let m = data.matrix();
    let rows: Vec<usize> = (0..m.rows()).collect();
    let mut scratch = Vec::new();
    (0..data.dim())
        .map(|f| best_split_rows(&m, &rows, &[f], 1, &mut scratch).map_or(0.0, |s| s.gain))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy([10, 0, 0]).unwrap(), 0.0);
        assert!((entropy([5, 5, 5]).unwrap() - 3f64.log2()).abs() < 1e-12);
        assert!((entropy([8, 4, 4]).unwrap() - 1.5).abs() < 1e-12);
        assert!(matches!(entropy([0, 0, 0]), Err(ForestError::EmptySet)));
    }

    #[test]
    fn entropy_is_permutation_exact() {
        let a = entropy_of([3, 7, 11]);
        for p in [[7, 3, 11], [11, 7, 3], [3, 11, 7]] {
            assert_eq!(a.to_bits(), entropy_of(p).to_bits());
        }
    }

    #[test]
    fn split_gain_empty_side_is_zero() {
        assert_eq!(split_gain(1.0, [0, 0, 0], [2, 2, 0]), 0.0);
    }
}
