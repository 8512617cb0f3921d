//! Evaluation protocols: repeated random splits with ROC analysis, temporal
//! evaluation against later samples, and robustness to obfuscation.

mod manifest;
mod obfuscation;
mod random;
mod report;
mod roc;
mod split;
mod temporal;

pub use manifest::{load_dataset, load_invoke_corpus, load_manifest, ManifestRow, RowFailure};
pub use obfuscation::{obfuscation_eval, obfuscation_eval_with, obfuscation_report, AppInvokes, ObfuscationConfig, ObfuscationOutcome};
pub use random::{random_split_eval, RandomSplitConfig};
pub use report::{
    emit_report, read_report_text, write_metrics_csv, write_report, AveragedCurve, CurveTable, ExperimentReport,
    MetricRow, MetricSummary, ReportFormat,
};
pub use roc::{operating_point, operating_point_full, roc_one_vs_benign, vertical_average, GridPoint, RocCurve, RocPoint};
pub use split::{assert_disjoint, split_dataset, stratified_split};
pub use temporal::{temporal_eval, temporal_eval_split, TemporalBin, TemporalConfig, TemporalSplitSpec};

use thiserror::Error;

use crate::forest::{ForestError, HyperParams, Label, LabeledDataset};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("no {0} samples")]
    MissingClass(Label),
    #[error("bin `{0}` has no samples")]
    EmptyBin(String),
    #[error("configuration error: {0}")]
    ConfigError(String),
    #[error("{0}")]
    UsageError(String),
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Default n_trees candidates for cross-validated selection.
pub const DEFAULT_GRID: &[usize] = &[10, 25, 50];

/// Default false-positive budget of the operating point.
pub const DEFAULT_TARGET_FPR: f64 = 0.01;

/// Independent seed for sub-stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Train with n_trees picked by cross-validation when the grid is non-empty
/// and the data allow it; otherwise with `hp.n_trees`.
pub(crate) fn fit(
    data: &LabeledDataset,
    grid: &[usize],
    hp: &HyperParams,
) -> Result<crate::forest::RandomForestModel, EvalError> {
    let n_trees = if grid.is_empty() {
        hp.n_trees
    } else if data.len() < crate::forest::CV_FOLDS {
        log::warn!(
            "{} training samples are too few for {}-fold selection; using {} trees",
            data.len(),
            crate::forest::CV_FOLDS,
            hp.n_trees
        );
        hp.n_trees
    } else {
        crate::forest::select_n_trees(data, grid, hp)?
    };
    Ok(crate::forest::train_forest(data, &hp.with_trees(n_trees))?)
}
