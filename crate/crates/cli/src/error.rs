use std::io;

use cyclefactor::entropy::EntropyError;
use cyclefactor::factor::FactorError;
use cyclefactor::format::FormatError;
use cyclefactor::{GraphError, OracleError, SamplerError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Validation(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io { .. } | CliError::Json(_) | CliError::Csv(_) => 4,
        }
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io(source) => CliError::io("reading graph", source),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Infeasible(format!(
            "{e}; exact verification is out of reach, use `cyclefactor` or `sample-stats` to sample instead"
        ))
    }
}

impl From<SamplerError> for CliError {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::SizeLimitExceeded(inner) => {
                CliError::Infeasible(format!("{inner}; use --backend mcmc for large instances"))
            }
            SamplerError::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<FactorError> for CliError {
    fn from(e: FactorError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EntropyError> for CliError {
    fn from(e: EntropyError) -> Self {
        match e {
            EntropyError::Oracle(inner) => inner.into(),
            EntropyError::SizeLimitExceeded(_) => CliError::Infeasible(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}
