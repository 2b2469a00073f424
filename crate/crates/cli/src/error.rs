use std::path::PathBuf;

use ega_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid config {path}: {field}: {message}")]
    Config {
        path: PathBuf,
        field: String,
        message: String,
    },

    #[error("constant column(s) {}: correlation is undefined", .names.join(", "))]
    ConstantColumns { names: Vec<String> },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 2 for bad input, 3 for unusable data, 4 for numerical non-convergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Read { .. } | CliError::Csv { .. } | CliError::Config { .. } => 2,
            CliError::Write { .. } => 2,
            CliError::ConstantColumns { .. } => 3,
            CliError::Core(e) => match e.root() {
                CoreError::NonConvergence { .. } | CoreError::GlassoNonConvergence { .. } => 4,
                CoreError::InvalidInput(_) | CoreError::InvalidSpec(_) | CoreError::InfeasibleModel { .. } => 2,
                _ => 3,
            },
        }
    }

    /// Replaces column indices with header names for constant-column errors.
    pub fn with_names(e: CoreError, names: &[String]) -> Self {
        match e.root() {
            CoreError::ConstantColumns { columns } => CliError::ConstantColumns {
                names: columns
                    .iter()
                    .map(|&c| names.get(c).cloned().unwrap_or_else(|| c.to_string()))
                    .collect(),
            },
            _ => CliError::Core(e),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
