use chrono::NaiveDate;
use rayon::prelude::*;

use super::report::{CurveTable, ExperimentReport, MetricRow};
use super::roc::{operating_point_full, roc_one_vs_benign};
use super::split::{assert_disjoint, split_dataset};
use super::{derive_seed, fit, EvalError, DEFAULT_GRID, DEFAULT_TARGET_FPR};
use crate::forest::{HyperParams, Label, LabeledDataset};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalBin {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl TemporalBin {
    pub fn new(label: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Self {
        TemporalBin { label: label.into(), start, end }
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalSplitSpec {
    /// Training cutoff: ransomware first seen on or before this date trains.
    pub d_tr: NaiveDate,
    pub bins: Vec<TemporalBin>,
}

impl TemporalSplitSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.bins.is_empty() {
            return Err(EvalError::ConfigError("no bins".into()));
        }
        for b in &self.bins {
            if b.start <= self.d_tr {
                return Err(EvalError::ConfigError(format!(
                    "bin `{}` starts {} which is not after the cutoff {}",
                    b.label, b.start, self.d_tr
                )));
            }
            if b.end < b.start {
                return Err(EvalError::ConfigError(format!("bin `{}` ends before it starts", b.label)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TemporalConfig {
    pub seed: u64,
    pub grid: Vec<usize>,
    pub hp: HyperParams,
    /// Share of the training partition held out to fit the threshold.
    pub holdout: f64,
    pub target_fpr: f64,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        TemporalConfig {
            seed: 0,
            grid: DEFAULT_GRID.to_vec(),
            hp: HyperParams::default(),
            holdout: 0.2,
            target_fpr: DEFAULT_TARGET_FPR,
        }
    }
}

/// Temporal protocol over one dataset. Trains on every trusted and malware
/// sample plus the ransomware first seen by `plan.d_tr`; each bin is scored
/// on the ransomware first seen within it.
pub fn temporal_eval(
    data: &LabeledDataset,
    plan: &TemporalSplitSpec,
    cfg: &TemporalConfig,
) -> Result<ExperimentReport, EvalError> {
    plan.validate()?;
    let d_tr = plan.d_tr;
    let pool = data.filter(|s| s.label != Label::Ransomware || s.first_seen <= d_tr);
    let incoming = data.filter(|s| s.label == Label::Ransomware && s.first_seen > d_tr);
    temporal_eval_split(&pool, &incoming, plan, cfg)
}

/// Temporal protocol with the training pool and the later samples given
/// separately. Non-ransomware samples of `incoming` are ignored, as are
/// ransomware samples of `pool` first seen after the cutoff. An id present in
/// both is a configuration error.
pub fn temporal_eval_split(
    pool: &LabeledDataset,
    incoming: &LabeledDataset,
    plan: &TemporalSplitSpec,
    cfg: &TemporalConfig,
) -> Result<ExperimentReport, EvalError> {
    plan.validate()?;
    if pool.fingerprint() != incoming.fingerprint() {
        return Err(EvalError::ConfigError("training pool and bins use different reference lists".into()));
    }
    let d_tr = plan.d_tr;
    let partition = pool.filter(|s| s.label != Label::Ransomware || s.first_seen <= d_tr);
    let counts = partition.class_counts();
    for class in [Label::Trusted, Label::Ransomware] {
        if counts[class.index()] < 2 {
            return Err(EvalError::TooFewSamples(format!(
                "training partition has {} {class} samples, at least 2 are needed",
                counts[class.index()]
            )));
        }
    }

    let (fit_part, holdout) = split_dataset(&partition, 1.0 - cfg.holdout, derive_seed(cfg.seed, 0));
    let model = fit(&fit_part, &cfg.grid, &cfg.hp.with_seed(derive_seed(cfg.seed, 1)))?;
    let curve = roc_one_vs_benign(&model, &holdout, Label::Ransomware)?;
    let op = operating_point_full(&curve, cfg.target_fpr);

    let train_ids = partition.ids();
    let bin_sets: Vec<LabeledDataset> = plan
        .bins
        .iter()
        .map(|b| incoming.filter(|s| s.label == Label::Ransomware && b.contains(s.first_seen)))
        .collect();
    for set in &bin_sets {
        if let Some(id) = set.samples().iter().find(|s| train_ids.contains(s.id.as_str())) {
            return Err(EvalError::ConfigError(format!("sample `{}` is both in training and in a bin", id.id)));
        }
        assert_disjoint(&partition, set)?;
    }

    let rows: Vec<MetricRow> = plan
        .bins
        .par_iter()
        .zip(&bin_sets)
        .map(|(bin, set)| -> Result<MetricRow, EvalError> {
            let mut row = MetricRow::new(bin.label.clone()).with("samples", set.len() as f64);
            if set.is_empty() {
                row.note = Some(EvalError::EmptyBin(bin.label.clone()).to_string());
                return Ok(row);
            }
            let mut detected = 0usize;
            for s in set.samples() {
                if model.predict_proba(&s.features)?[Label::Ransomware.index()] >= op.threshold {
                    detected += 1;
                }
            }
            Ok(row
                .with("detected", detected as f64)
                .with("detection_rate", detected as f64 / set.len() as f64))
        })
        .collect::<Result<_, _>>()?;

    let mut report = ExperimentReport::new("temporal", cfg.seed, partition.fingerprint())
        .param("d_tr", d_tr)
        .param("holdout", cfg.holdout)
        .param("target_fpr", cfg.target_fpr)
        .param("n_trees", model.hyperparams.n_trees)
        .param("threshold", op.threshold)
        .param("train_size", fit_part.len())
        .param("holdout_size", holdout.len());
    report.rows.push(
        MetricRow::new("holdout")
            .with("threshold", op.threshold)
            .with("fpr", op.fpr)
            .with("tpr", op.tpr),
    );
    report.rows.extend(rows);
    for r in &report.rows {
        if let Some(note) = &r.note {
            report.notes.push(note.clone());
        }
    }
    report.notes.push("a sample is detected when its ransomware score reaches the hold-out threshold".into());
    report.curves.push(CurveTable { name: "holdout".into(), positive: Label::Ransomware, points: curve.points });
    Ok(report)
}
