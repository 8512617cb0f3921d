use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::roc::{GridPoint, RocPoint};
use super::EvalError;
use crate::forest::Label;
use crate::reference::Fingerprint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    /// e.g. `repeat-1`, a bin label, `baseline`.
    pub name: String,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MetricRow {
    pub fn new(name: impl Into<String>) -> Self {
        MetricRow {
            name: name.into(),
            metrics: BTreeMap::new(),
            note: None,
        }
    }

    pub fn with(mut self, metric: &str, value: f64) -> Self {
        self.metrics.insert(metric.into(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; present whenever n > 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub name: String,
    pub positive: Label,
    pub points: Vec<RocPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedCurve {
    pub name: String,
    pub positive: Label,
    pub points: Vec<GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub protocol: String,
    pub tool_version: String,
    pub seed: u64,
    pub reference_fingerprint: Fingerprint,
    pub parameters: BTreeMap<String, String>,
    pub rows: Vec<MetricRow>,
    pub summary: Vec<MetricSummary>,
    pub curves: Vec<CurveTable>,
    pub averaged_curves: Vec<AveragedCurve>,
    pub notes: Vec<String>,
    /// Wall-clock seconds, filled in by the caller; left empty so reports
    /// stay reproducible byte for byte.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_secs: Option<f64>,
}

impl ExperimentReport {
    pub fn new(protocol: &str, seed: u64, reference_fingerprint: Fingerprint) -> Self {
        ExperimentReport {
            protocol: protocol.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            reference_fingerprint,
            parameters: BTreeMap::new(),
            rows: Vec::new(),
            summary: Vec::new(),
            curves: Vec::new(),
            averaged_curves: Vec::new(),
            notes: Vec::new(),
            runtime_secs: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    pub fn row(&self, name: &str) -> Option<&MetricRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn metric(&self, row: &str, metric: &str) -> Option<f64> {
        self.row(row)?.metrics.get(metric).copied()
    }

    pub fn summary_of(&self, metric: &str) -> Option<&MetricSummary> {
        self.summary.iter().find(|s| s.metric == metric)
    }

    /// Mean and sample standard deviation of every metric present in all
    /// rows.
    pub fn summarize(&mut self) {
        self.summary.clear();
        let Some(first) = self.rows.first() else { return };
        for metric in first.metrics.keys() {
            let vals: Vec<f64> = self.rows.iter().filter_map(|r| r.metrics.get(metric).copied()).collect();
            if vals.len() != self.rows.len() {
                continue;
            }
            let n = vals.len();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let std = (n > 1).then(|| {
                (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
            });
            self.summary.push(MetricSummary {
                metric: metric.clone(),
                n,
                mean,
                std,
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// One row per ROC point.
    Csv,
    /// The full report as a JSON document.
    Text,
}

impl FromStr for ReportFormat {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            other => Err(EvalError::UsageError(format!("unknown report format `{other}` (expected csv or text)"))),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Text => "json",
        }
    }
}

/// Floats are written in shortest round-trip form.
pub fn write_report<W: Write>(report: &ExperimentReport, format: ReportFormat, mut out: W) -> Result<(), EvalError> {
    match format {
        ReportFormat::Text => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["curve", "positive", "threshold", "fpr", "tpr"])?;
            for c in &report.curves {
                for p in &c.points {
                    w.write_record([
                        c.name.clone(),
                        c.positive.token().to_string(),
                        p.threshold.to_string(),
                        p.fpr.to_string(),
                        p.tpr.to_string(),
                    ])?;
                }
            }
            for c in &report.averaged_curves {
                for p in &c.points {
                    w.write_record([
                        c.name.clone(),
                        c.positive.token().to_string(),
                        String::new(),
                        p.fpr.to_string(),
                        p.tpr.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Per-row metrics and the summary as CSV: `row,metric,value`. Summary rows
/// are named `mean` and `std`.
pub fn write_metrics_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "metric", "value"])?;
    for r in &report.rows {
        for (k, v) in &r.metrics {
            w.write_record([r.name.as_str(), k, &v.to_string()])?;
        }
        if let Some(note) = &r.note {
            w.write_record([r.name.as_str(), "note", note])?;
        }
    }
    for s in &report.summary {
        w.write_record(["mean", s.metric.as_str(), &s.mean.to_string()])?;
        if let Some(std) = s.std {
            w.write_record(["std", s.metric.as_str(), &std.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: impl AsRef<Path>) -> Result<(), EvalError> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    write_report(report, format, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_report_text(text: &str) -> Result<ExperimentReport, EvalError> {
    Ok(serde_json::from_str(text)?)
}
