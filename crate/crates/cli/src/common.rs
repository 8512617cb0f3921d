use std::path::{Path, PathBuf};

use apiscan_core::eval::{
    emit_report, load_dataset, load_invoke_corpus, load_manifest, write_metrics_csv, AppInvokes, ExperimentReport,
    ManifestRow, RowFailure,
};
use apiscan_core::testkit::corpus::{corpus, dataset};
use apiscan_core::{bundled_list, ApiReferenceList, LabeledDataset, ParseOptions};

use crate::error::{CliError, CliResult};
use crate::{DataArgs, OutputArgs, ReferenceArgs};

pub fn parse_options(strict: bool) -> ParseOptions {
    ParseOptions { strict }
}

/// `--reference`, else `<dir>/<granularity>.txt`, else the bundled list.
pub fn reference(args: &ReferenceArgs) -> CliResult<ApiReferenceList> {
    let g = args.granularity;
    let path = match (&args.reference, &args.reference_dir) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join(format!("{g}.txt")),
        (None, None) => {
            log::info!("using the bundled {g} reference list");
            return Ok(bundled_list(g));
        }
    };
    let list = ApiReferenceList::load(&path, g)
        .map_err(|e| CliError::usage(format!("reference list {}: {e}", path.display())))?;
    log::info!("reference {} ({} keys, fingerprint {})", path.display(), list.len(), list.fingerprint());
    Ok(list)
}

fn manifest_rows(path: &Path) -> CliResult<Vec<ManifestRow>> {
    load_manifest(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn report_failures(failures: &[RowFailure], total: usize) {
    if failures.is_empty() {
        return;
    }
    for f in failures {
        log::warn!("line {}: {}: {}", f.line, f.path.display(), f.reason);
    }
    eprintln!(
        "apiscan: skipped {} of {} manifest rows that could not be analyzed ({:.2}%)",
        failures.len(),
        total,
        100.0 * failures.len() as f64 / total.max(1) as f64
    );
}

/// Feature vectors from a manifest or a generated corpus.
pub fn load_data(data: &DataArgs, list: &ApiReferenceList, seed: u64) -> CliResult<LabeledDataset> {
    if let Some(per_class) = data.synthetic {
        return Ok(dataset(&corpus(per_class, seed), list));
    }
    let path = data.manifest.as_ref().expect("clap requires --manifest or --synthetic");
    let rows = manifest_rows(path)?;
    let (ds, failures) = load_dataset(&rows, list, parse_options(data.strict_dex))?;
    report_failures(&failures, rows.len());
    Ok(ds)
}

/// Invoke lists from a manifest or a generated corpus.
pub fn load_apps(data: &DataArgs, seed: u64) -> CliResult<Vec<AppInvokes>> {
    if let Some(per_class) = data.synthetic {
        return Ok(corpus(per_class, seed)
            .into_iter()
            .map(|a| AppInvokes { invokes: a.invokes(), id: a.id, label: a.label, first_seen: a.first_seen })
            .collect());
    }
    let path = data.manifest.as_ref().expect("clap requires --manifest or --synthetic");
    let rows = manifest_rows(path)?;
    let (apps, failures) = load_invoke_corpus(&rows, parse_options(data.strict_dex));
    report_failures(&failures, rows.len());
    Ok(apps)
}

/// Write `<name>.<ext>` and `<name>-metrics.csv` under `--out`; returns the
/// report path.
pub fn write_outputs(report: &ExperimentReport, name: &str, out: &OutputArgs) -> CliResult<PathBuf> {
    std::fs::create_dir_all(&out.out)?;
    let path = out.out.join(format!("{name}.{}", out.format.extension()));
    emit_report(report, out.format, &path)?;
    let metrics = std::fs::File::create(out.out.join(format!("{name}-metrics.csv")))?;
    write_metrics_csv(report, std::io::BufWriter::new(metrics))?;
    Ok(path)
}

/// Summary lines for stdout: `metric mean ± std`.
pub fn print_summary(report: &ExperimentReport) {
    for s in &report.summary {
        match s.std {
            Some(sd) => println!("{:<24} {:.4} ± {:.4}", s.metric, s.mean, sd),
            None => println!("{:<24} {:.4}", s.metric, s.mean),
        }
    }
}
