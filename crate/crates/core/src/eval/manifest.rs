use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;

use super::EvalError;
use crate::dex::ParseOptions;
use crate::features::{extract_features, extract_from_apk};
use crate::forest::{Label, LabeledDataset, Sample};
use crate::ingest::load_invoke_list_text;
use crate::invoke::InvokeSite;
use crate::reference::ApiReferenceList;

/// One line of a dataset manifest (`path,label,first_seen,family`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    /// 1-based line number in the manifest file.
    pub line: usize,
    /// Resolved against the manifest's directory when relative.
    pub path: PathBuf,
    /// The path as written; used as the sample id.
    pub id: String,
    pub label: Label,
    pub first_seen: NaiveDate,
    pub family: Option<String>,
}

/// A manifest row whose sample could not be analyzed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowFailure {
    pub line: usize,
    pub path: PathBuf,
    pub reason: String,
}

/// Parse a manifest. The header row is required; `family` may be empty or
/// absent.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>, EvalError> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let text = std::fs::read_to_string(path)?;
    parse_manifest(&text, base)
}

pub(crate) fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestRow>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    let expected = ["path", "label", "first_seen"];
    if header.len() < 3 || header.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(EvalError::Manifest { line: 1, reason: "header must be path,label,first_seen,family".into() });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |reason: String| EvalError::Manifest { line, reason };
        if rec.len() < 3 || rec.len() > 4 {
            return Err(bad(format!("expected 3 or 4 fields, found {}", rec.len())));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(bad("empty path".into()));
        }
        let label: Label = rec[1].parse().map_err(|_| bad(format!("unknown label `{}`", &rec[1])))?;
        let first_seen = NaiveDate::parse_from_str(&rec[2], "%Y-%m-%d")
            .map_err(|e| bad(format!("bad date `{}`: {e}", &rec[2])))?;
        let family = rec.get(3).filter(|f| !f.is_empty()).map(str::to_string);
        rows.push(ManifestRow { line, path: base.join(&id), id, label, first_seen, family });
    }
    Ok(rows)
}

fn is_invoke_list(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "txt")
}

/// Invoke sites of one row: `.txt` rows are invoke lists, anything else is
/// an APK.
fn row_invokes(row: &ManifestRow, opts: ParseOptions) -> Result<Vec<InvokeSite>, String> {
    if is_invoke_list(&row.path) {
        load_invoke_list_text(&row.path).map_err(|e| e.to_string())
    } else {
        crate::features::invokes_from_apk(&row.path, opts).map_err(|e| e.to_string())
    }
}

/// Extract a feature vector for every row, in parallel. Rows that fail are
/// skipped and returned alongside the dataset, in manifest order.
pub fn load_dataset(
    rows: &[ManifestRow],
    list: &ApiReferenceList,
    opts: ParseOptions,
) -> Result<(LabeledDataset, Vec<RowFailure>), EvalError> {
    let results: Vec<Result<Sample, RowFailure>> = rows
        .par_iter()
        .map(|row| {
            let fv = if is_invoke_list(&row.path) {
                load_invoke_list_text(&row.path)
                    .map(|sites| extract_features(&sites, list))
                    .map_err(|e| e.to_string())
            } else {
                extract_from_apk(&row.path, list, opts).map_err(|e| e.to_string())
            };
            fv.map(|features| Sample {
                id: row.id.clone(),
                features,
                label: row.label,
                first_seen: row.first_seen,
            })
            .map_err(|reason| RowFailure { line: row.line, path: row.path.clone(), reason })
        })
        .collect();
    let (mut samples, mut failures) = (Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok(s) => samples.push(s),
            Err(f) => {
                log::warn!("skipping {} (line {}): {}", f.path.display(), f.line, f.reason);
                failures.push(f);
            }
        }
    }
    Ok((LabeledDataset::new(list.fingerprint(), list.len(), samples)?, failures))
}

/// Like [`load_dataset`] but keeps the invoke lists, as the obfuscation
/// protocol needs them.
pub fn load_invoke_corpus(
    rows: &[ManifestRow],
    opts: ParseOptions,
) -> (Vec<super::AppInvokes>, Vec<RowFailure>) {
    let results: Vec<_> = rows
        .par_iter()
        .map(|row| {
            row_invokes(row, opts)
                .map(|invokes| super::AppInvokes {
                    id: row.id.clone(),
                    label: row.label,
                    first_seen: row.first_seen,
                    invokes,
                })
                .map_err(|reason| RowFailure { line: row.line, path: row.path.clone(), reason })
        })
        .collect();
    let (mut apps, mut failures) = (Vec::new(), Vec::new());
    for r in results {
        match r {
            Ok(a) => apps.push(a),
            Err(f) => {
                log::warn!("skipping {} (line {}): {}", f.path.display(), f.line, f.reason);
                failures.push(f);
            }
        }
    }
    (apps, failures)
}
