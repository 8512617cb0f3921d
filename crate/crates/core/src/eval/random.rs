use rayon::prelude::*;

use super::report::{AveragedCurve, CurveTable, ExperimentReport, MetricRow};
use super::roc::{operating_point_full, roc_one_vs_benign, vertical_average, RocCurve};
use super::split::{assert_disjoint, split_dataset};
use super::{derive_seed, fit, EvalError, DEFAULT_GRID, DEFAULT_TARGET_FPR};
use crate::forest::{argmax, HyperParams, Label, LabeledDataset};

#[derive(Debug, Clone)]
pub struct RandomSplitConfig {
    /// Share of each class used for training.
    pub fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    pub grid: Vec<usize>,
    pub hp: HyperParams,
    pub target_fpr: f64,
    /// Resolution of the averaged ROC grid.
    pub average_steps: usize,
}

impl Default for RandomSplitConfig {
    fn default() -> Self {
        RandomSplitConfig {
            fraction: 0.5,
            repeats: 5,
            seed: 0,
            grid: DEFAULT_GRID.to_vec(),
            hp: HyperParams::default(),
            target_fpr: DEFAULT_TARGET_FPR,
            average_steps: 100,
        }
    }
}

struct Repeat {
    row: MetricRow,
    ransomware: RocCurve,
    malware: RocCurve,
}

fn one_repeat(data: &LabeledDataset, cfg: &RandomSplitConfig, r: usize) -> Result<Repeat, EvalError> {
    let seed = derive_seed(cfg.seed, r as u64);
    let (train, test) = split_dataset(data, cfg.fraction, seed);
    assert_disjoint(&train, &test)?;
    let model = fit(&train, &cfg.grid, &cfg.hp.with_seed(derive_seed(seed, 1)))?;
    let ransomware = roc_one_vs_benign(&model, &test, Label::Ransomware)?;
    let malware = roc_one_vs_benign(&model, &test, Label::GenericMalware)?;
    let correct = test
        .samples()
        .iter()
        .filter(|s| argmax(&model.predict_proba(&s.features).expect("checked")) == s.label)
        .count();
    let op_r = operating_point_full(&ransomware, cfg.target_fpr);
    let op_m = operating_point_full(&malware, cfg.target_fpr);
    let row = MetricRow::new(format!("repeat-{}", r + 1))
        .with("n_trees", model.hyperparams.n_trees as f64)
        .with("train_size", train.len() as f64)
        .with("test_size", test.len() as f64)
        .with("accuracy", correct as f64 / test.len() as f64)
        .with("ransomware_tpr_at_fpr", op_r.tpr)
        .with("ransomware_fpr", op_r.fpr)
        .with("ransomware_auc", ransomware.auc())
        .with("malware_tpr_at_fpr", op_m.tpr)
        .with("malware_fpr", op_m.fpr)
        .with("malware_auc", malware.auc());
    Ok(Repeat { row, ransomware, malware })
}

/// Repeated stratified random splits. Each repeat selects n_trees by
/// cross-validation on its training part, trains a forest, and scores the
/// test part with ransomware-vs-trusted and malware-vs-trusted ROC curves.
pub fn random_split_eval(data: &LabeledDataset, cfg: &RandomSplitConfig) -> Result<ExperimentReport, EvalError> {
    let counts = data.class_counts();
    if let Some(class) = Label::ALL.into_iter().find(|c| counts[c.index()] < 2) {
        return Err(EvalError::TooFewSamples(format!(
            "{class} has {} samples, at least 2 are needed",
            counts[class.index()]
        )));
    }
    if !(cfg.fraction > 0.0 && cfg.fraction < 1.0) || cfg.repeats == 0 {
        return Err(EvalError::ConfigError("fraction must be in (0, 1) and repeats at least 1".into()));
    }
    let repeats: Vec<Repeat> = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| one_repeat(data, cfg, r))
        .collect::<Result<_, _>>()?;

    let mut report = ExperimentReport::new("random-split", cfg.seed, data.fingerprint())
        .param("fraction", cfg.fraction)
        .param("repeats", cfg.repeats)
        .param("grid", format!("{:?}", cfg.grid))
        .param("target_fpr", cfg.target_fpr)
        .param("samples", data.len());
    report.notes.push(format!(
        "averaged curves use vertical averaging on {} evenly spaced false-positive rates",
        cfg.average_steps + 1
    ));
    for (positive, pick) in [
        (Label::Ransomware, (|r: &Repeat| &r.ransomware) as fn(&Repeat) -> &RocCurve),
        (Label::GenericMalware, |r: &Repeat| &r.malware),
    ] {
        let curves: Vec<RocCurve> = repeats.iter().map(|r| pick(r).clone()).collect();
        for (i, c) in curves.iter().enumerate() {
            report.curves.push(CurveTable {
                name: format!("repeat-{}", i + 1),
                positive,
                points: c.points.clone(),
            });
        }
        report.averaged_curves.push(AveragedCurve {
            name: "mean".into(),
            positive,
            points: vertical_average(&curves, cfg.average_steps),
        });
    }
    report.rows = repeats.into_iter().map(|r| r.row).collect();
    report.summarize();
    Ok(report)
}
