//! `apiscan`: scan application packages for ransomware with a System-API
//! random forest, train models, and run the evaluation protocols.

mod commands;
mod common;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use apiscan_core::eval::ReportFormat;
use apiscan_core::{Granularity, ObfuscationKind};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

/// Environment variable naming a directory with `package.txt`, `class.txt`
/// and `method.txt` reference lists.
pub const REFERENCE_DIR_ENV: &str = "APISCAN_REFERENCE_DIR";

#[derive(Debug, Parser)]
#[command(name = "apiscan", version, about = "System-API based Android ransomware detection")]
pub struct Cli {
    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify application packages with a trained model.
    Scan(ScanArgs),
    /// Write feature vectors as CSV.
    Extract(ExtractArgs),
    /// Train a model, choosing the number of trees by cross-validation.
    Train(TrainArgs),
    /// Repeated stratified random splits with ROC analysis.
    EvalRandom(EvalRandomArgs),
    /// Train on samples up to a cutoff date and test on later ones.
    EvalTemporal(EvalTemporalArgs),
    /// Detection of obfuscated ransomware, optionally with one obfuscated
    /// sample added to training.
    EvalObfuscation(EvalObfuscationArgs),
    /// Rank reference-list features by information gain.
    Rank(RankArgs),
    /// Describe a model file.
    ModelInfo(ModelInfoArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ReferenceArgs {
    #[arg(long, default_value = "method")]
    pub granularity: Granularity,
    /// Reference list file. Defaults to `<granularity>.txt` in the
    /// reference directory, or the bundled list.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, env = REFERENCE_DIR_ENV, hide_env_values = true)]
    pub reference_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Dataset manifest: CSV with `path,label,first_seen,family`.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub manifest: Option<PathBuf>,
    /// Use a generated corpus with this many samples per class instead.
    #[arg(long, value_name = "PER_CLASS")]
    pub synthetic: Option<usize>,
    /// Verify DEX checksums and sizes.
    #[arg(long)]
    pub strict_dex: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, default_value = "text")]
    pub format: ReportFormat,
    /// Directory for report files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Store the wall-clock runtime in the report (makes reports differ
    /// between runs).
    #[arg(long)]
    pub record_runtime: bool,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(required = true)]
    pub apks: Vec<PathBuf>,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[arg(long)]
    pub strict_dex: bool,
    /// Number of present features to list, by model importance.
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    #[arg(long, default_value = "text")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Packages or invoke-list files; ignored with --manifest.
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[arg(long)]
    pub strict_dex: bool,
    /// Output CSV file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Candidate tree counts.
    #[arg(long, value_delimiter = ',', default_value = "10,25,50")]
    pub grid: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the cross-validation table as `cv.csv` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalRandomArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Share of each class used for training.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    #[arg(long, value_delimiter = ',', default_value = "10,25,50")]
    pub grid: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalTemporalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Training cutoff.
    #[arg(long, default_value = "2016-12-31")]
    pub d_tr: NaiveDate,
    /// Test bin as `LABEL:START:END` (repeatable). Defaults to the two
    /// half-years after the cutoff.
    #[arg(long = "bin", value_name = "LABEL:START:END")]
    pub bins: Vec<String>,
    /// With --synthetic: number of drifted ransomware samples after the
    /// cutoff.
    #[arg(long, default_value_t = 200)]
    pub drifted: usize,
    #[arg(long, value_delimiter = ',', default_value = "10,25,50")]
    pub grid: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalObfuscationArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value = "class-encryption")]
    pub transform: ObfuscationKind,
    /// Also run with one obfuscated sample in training and report both
    /// rates.
    #[arg(long)]
    pub plus_one: bool,
    #[arg(long, value_delimiter = ',', default_value = "10,25,50")]
    pub grid: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[arg(long, default_value_t = 20)]
    pub top: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ModelInfoArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Name features using this list; must match the model.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value = "method")]
    pub granularity: Granularity,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).parse_default_env().init();

    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("apiscan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
