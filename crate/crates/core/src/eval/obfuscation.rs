use chrono::NaiveDate;
use rayon::prelude::*;

use super::report::{ExperimentReport, MetricRow};
use super::{derive_seed, fit, EvalError, DEFAULT_GRID};
use crate::features::extract_features;
use crate::forest::{HyperParams, Label, LabeledDataset, Sample};
use crate::invoke::InvokeSite;
use crate::obfuscate::ObfuscationTransform;
use crate::reference::ApiReferenceList;

/// An application kept as its invoke list, so transforms can be applied.
#[derive(Debug, Clone, PartialEq)]
pub struct AppInvokes {
    pub id: String,
    pub label: Label,
    pub first_seen: NaiveDate,
    pub invokes: Vec<InvokeSite>,
}

#[derive(Debug, Clone)]
pub struct ObfuscationConfig {
    pub seed: u64,
    pub grid: Vec<usize>,
    pub hp: HyperParams,
}

impl Default for ObfuscationConfig {
    fn default() -> Self {
        ObfuscationConfig { seed: 0, grid: DEFAULT_GRID.to_vec(), hp: HyperParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObfuscationOutcome {
    pub detected: usize,
    pub evaluated: usize,
    pub rate: f64,
    /// Id of the transformed sample added to training, if any.
    pub injected: Option<String>,
    /// The ransomware sample whose transformed version is reserved for
    /// injection. It is left out of evaluation in both modes so that runs
    /// with and without injection score the same samples.
    pub reserved: String,
    pub n_trees: usize,
}

/// Train on the original apps (plus one transformed ransomware sample when
/// `plus_one`), then classify the transformed version of every other
/// ransomware app and report the share labeled ransomware.
pub fn obfuscation_eval(
    apps: &[AppInvokes],
    list: &ApiReferenceList,
    t: &ObfuscationTransform,
    plus_one: bool,
    cfg: &ObfuscationConfig,
) -> Result<ObfuscationOutcome, EvalError> {
    obfuscation_eval_with(apps, list, t.kind.as_str(), |inv| t.apply(inv), plus_one, cfg)
}

/// [`obfuscation_eval`] with an arbitrary transform; `name` suffixes the ids
/// of transformed samples.
pub fn obfuscation_eval_with<F>(
    apps: &[AppInvokes],
    list: &ApiReferenceList,
    name: &str,
    transform: F,
    plus_one: bool,
    cfg: &ObfuscationConfig,
) -> Result<ObfuscationOutcome, EvalError>
where
    F: Fn(&[InvokeSite]) -> Vec<InvokeSite> + Sync,
{
    let originals: Vec<Sample> = apps
        .par_iter()
        .map(|a| Sample {
            id: a.id.clone(),
            features: extract_features(&a.invokes, list),
            label: a.label,
            first_seen: a.first_seen,
        })
        .collect();
    let ransomware: Vec<&AppInvokes> = apps.iter().filter(|a| a.label == Label::Ransomware).collect();
    if ransomware.is_empty() {
        return Err(EvalError::EmptyBin(format!("{name}: no ransomware to transform")));
    }
    let reserved = (derive_seed(cfg.seed, 2) % ransomware.len() as u64) as usize;
    let transformed: Vec<Sample> = ransomware
        .par_iter()
        .map(|a| Sample {
            id: format!("{}+{name}", a.id),
            features: extract_features(&transform(&a.invokes), list),
            label: Label::Ransomware,
            first_seen: a.first_seen,
        })
        .collect();

    let base = LabeledDataset::new(list.fingerprint(), list.len(), originals)?;
    let train = if plus_one { base.extended([transformed[reserved].clone()])? } else { base };
    let eval: Vec<&Sample> = transformed.iter().enumerate().filter(|&(i, _)| i != reserved).map(|(_, s)| s).collect();
    if eval.is_empty() {
        return Err(EvalError::EmptyBin(format!("{name}: only the reserved sample is ransomware")));
    }
    let train_ids = train.ids();
    if let Some(s) = eval.iter().find(|s| train_ids.contains(s.id.as_str())) {
        return Err(EvalError::ConfigError(format!("evaluated sample `{}` is in training", s.id)));
    }

    let model = fit(&train, &cfg.grid, &cfg.hp.with_seed(derive_seed(cfg.seed, 1)))?;
    let mut detected = 0;
    for s in &eval {
        if model.predict(&s.features)? == Label::Ransomware {
            detected += 1;
        }
    }
    Ok(ObfuscationOutcome {
        detected,
        evaluated: eval.len(),
        rate: detected as f64 / eval.len() as f64,
        injected: plus_one.then(|| transformed[reserved].id.clone()),
        reserved: ransomware[reserved].id.clone(),
        n_trees: model.hyperparams.n_trees,
    })
}

/// The run without injection and, when `plus_one`, the paired run with it
/// on the same seed.
pub fn obfuscation_report(
    apps: &[AppInvokes],
    list: &ApiReferenceList,
    t: &ObfuscationTransform,
    plus_one: bool,
    cfg: &ObfuscationConfig,
) -> Result<ExperimentReport, EvalError> {
    let mut runs = vec![("baseline", obfuscation_eval(apps, list, t, false, cfg)?)];
    if plus_one {
        runs.push(("plus-one", obfuscation_eval(apps, list, t, true, cfg)?));
    }
    let mut report = ExperimentReport::new("obfuscation", cfg.seed, list.fingerprint())
        .param("transform", t.kind.as_str())
        .param("transform_seed", t.seed)
        .param("reserved", &runs[0].1.reserved);
    if let Some(id) = runs.iter().find_map(|r| r.1.injected.clone()) {
        report = report.param("injected", id);
    }
    for (name, o) in &runs {
        report.rows.push(
            MetricRow::new(*name)
                .with("detection_rate", o.rate)
                .with("detected", o.detected as f64)
                .with("evaluated", o.evaluated as f64)
                .with("n_trees", o.n_trees as f64),
        );
    }
    report.notes.push("detection counts samples whose predicted class is ransomware".into());
    Ok(report)
}
