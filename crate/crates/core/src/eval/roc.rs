use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::forest::{Label, LabeledDataset, RandomForestModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Points sorted by descending threshold. A sample is called positive when
/// its score is at least the threshold, so the last point is (1, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Sweep every distinct score of `(score, is_positive)` pairs.
    pub fn from_scores(scores: &[(f64, bool)]) -> Result<RocCurve, EvalError> {
        let p = scores.iter().filter(|s| s.1).count();
        let n = scores.len() - p;
        if p == 0 || n == 0 {
            return Err(EvalError::ConfigError(format!(
                "ROC needs positives and negatives (got {p} and {n})"
            )));
        }
        let mut sorted = scores.to_vec();
        sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut points = Vec::new();
        let (mut tp, mut fp) = (0usize, 0usize);
        let mut i = 0;
        while i < sorted.len() {
            let t = sorted[i].0;
            while i < sorted.len() && sorted[i].0 == t {
                if sorted[i].1 {
                    tp += 1;
                } else {
                    fp += 1;
                }
                i += 1;
            }
            points.push(RocPoint {
                threshold: t,
                fpr: fp as f64 / n as f64,
                tpr: tp as f64 / p as f64,
            });
        }
        Ok(RocCurve { points })
    }

    /// Area under the curve, trapezoidal, from the origin.
    pub fn auc(&self) -> f64 {
        let mut area = 0.0;
        let (mut x, mut y) = (0.0, 0.0);
        for pt in &self.points {
            area += (pt.fpr - x) * (pt.tpr + y) / 2.0;
            x = pt.fpr;
            y = pt.tpr;
        }
        area
    }

    /// Best true-positive rate reachable with false-positive rate at most
    /// `fpr` (0 if none).
    pub fn tpr_at(&self, fpr: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.fpr <= fpr)
            .map(|p| p.tpr)
            .fold(0.0, f64::max)
    }
}

/// Threshold of the operating point: the lowest threshold whose false
/// positive rate does not exceed `target_fpr` (the point with the highest
/// detection at that budget). Falls back to the highest threshold when every
/// point exceeds the budget.
pub fn operating_point(curve: &RocCurve, target_fpr: f64) -> f64 {
    operating_point_full(curve, target_fpr).threshold
}

pub fn operating_point_full(curve: &RocCurve, target_fpr: f64) -> RocPoint {
    curve
        .points
        .iter()
        .rev()
        .find(|p| p.fpr <= target_fpr)
        .or(curve.points.first())
        .copied()
        .expect("curve is non-empty")
}

/// Scores of `positive` against `Trusted` over the test samples of those two
/// classes; the third class is left out.
pub fn roc_one_vs_benign(model: &RandomForestModel, test: &LabeledDataset, positive: Label) -> Result<RocCurve, EvalError> {
    if positive == Label::Trusted {
        return Err(EvalError::ConfigError("the positive class cannot be trusted".into()));
    }
    let mut scores = Vec::new();
    for s in test.samples() {
        if s.label == positive || s.label == Label::Trusted {
            let p = model.predict_proba(&s.features)?;
            scores.push((p[positive.index()], s.label == positive));
        }
    }
    for class in [positive, Label::Trusted] {
        if !scores.iter().any(|&(_, is_pos)| is_pos == (class == positive)) {
            return Err(EvalError::MissingClass(class));
        }
    }
    RocCurve::from_scores(&scores)
}

/// Vertical average: mean over curves of [`RocCurve::tpr_at`] on a grid of
/// `steps + 1` evenly spaced false-positive rates.
pub fn vertical_average(curves: &[RocCurve], steps: usize) -> Vec<GridPoint> {
    (0..=steps)
        .map(|i| {
            let fpr = i as f64 / steps as f64;
            let tpr = curves.iter().map(|c| c.tpr_at(fpr)).sum::<f64>() / curves.len() as f64;
            GridPoint { fpr, tpr }
        })
        .collect()
}

/// A point of an averaged curve, which has no single threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub fpr: f64,
    pub tpr: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(pts: &[(f64, f64, f64)]) -> RocCurve {
        RocCurve {
            points: pts.iter().map(|&(threshold, fpr, tpr)| RocPoint { threshold, fpr, tpr }).collect(),
        }
    }

    #[test]
    fn perfect_and_uninformative() {
        let c = RocCurve::from_scores(&[(1.0, true), (1.0, true), (0.0, false), (0.0, false)]).unwrap();
        assert_eq!(c.points[0], RocPoint { threshold: 1.0, fpr: 0.0, tpr: 1.0 });
        assert_eq!(c.auc(), 1.0);
        let c = RocCurve::from_scores(&[(0.3, true), (0.3, false), (0.3, true)]).unwrap();
        assert_eq!(c.points, vec![RocPoint { threshold: 0.3, fpr: 1.0, tpr: 1.0 }]);
        assert_eq!(c.auc(), 0.5);
    }

    #[test]
    fn operating_point_rules() {
        let c = curve(&[(0.9, 0.0, 0.5), (0.7, 0.01, 0.8), (0.5, 0.02, 0.9), (0.1, 1.0, 1.0)]);
        assert_eq!(operating_point(&c, 0.01), 0.7);
        let c = curve(&[(0.9, 0.2, 0.5), (0.1, 1.0, 1.0)]);
        assert_eq!(operating_point(&c, 0.01), 0.9);
        let perfect = RocCurve::from_scores(&[(0.9, true), (0.8, true), (0.4, false), (0.1, false)]).unwrap();
        assert_eq!(operating_point(&perfect, 0.01), 0.8);
    }
}
