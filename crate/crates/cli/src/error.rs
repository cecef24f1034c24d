use std::path::PathBuf;

use tbell_core::Setting;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("insufficient data: no throws for setting pair(s) {}", format_pairs(.0))]
    InsufficientData(Vec<(Setting, Setting)>),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(tbell_core::Error),
}

fn format_pairs(pairs: &[(Setting, Setting)]) -> String {
    pairs
        .iter()
        .map(|(a, b)| format!("({a},{b})"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Parse { .. } => 3,
            CliError::InsufficientData(_) => 4,
            CliError::Io { .. } => 5,
            CliError::Model(tbell_core::Error::InsufficientData(..)) => 4,
            CliError::Model(_) => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<tbell_core::Error> for CliError {
    fn from(e: tbell_core::Error) -> Self {
        match e {
            tbell_core::Error::InsufficientData(a, b) => CliError::InsufficientData(vec![(a, b)]),
            other => CliError::Model(other),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
