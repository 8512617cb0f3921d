use std::fmt;

use apiscan_core::eval::EvalError;
use apiscan_core::{ExtractError, ForestError, IngestError, ReferenceError};

/// Operational failures, each with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad input files, or inputs the protocols reject.
    Usage(String),
    /// An application package could not be read or parsed.
    Parse(String),
    /// A model was built against another reference list.
    Fingerprint(String),
    Other(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Fingerprint(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Parse(m) | CliError::Fingerprint(m) => f.write_str(m),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<ForestError> for CliError {
    fn from(e: ForestError) -> Self {
        match e {
            ForestError::FingerprintMismatch { .. } | ForestError::DimensionMismatch { .. } => {
                CliError::Fingerprint(e.to_string())
            }
            ForestError::Io(io) => CliError::Other(io.into()),
            ForestError::CorruptModel(_) | ForestError::VersionMismatch { .. } => CliError::Other(e.into()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Forest(f) => f.into(),
            EvalError::Io(io) => CliError::Other(io.into()),
            EvalError::Json(_) => CliError::Other(e.into()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ExtractError> for CliError {
    fn from(e: ExtractError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<ReferenceError> for CliError {
    fn from(e: ReferenceError) -> Self {
        CliError::Usage(format!("reference list: {e}"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;
