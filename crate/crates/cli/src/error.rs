use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SUPPORT: i32 = 3;
pub const EXIT_METHOD: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {reason}")]
    Parse { row: usize, reason: String },

    #[error("unknown model {0:?} (expected mvn, normal-normal or beta-binomial)")]
    UnknownModel(String),

    #[error("invalid model parameters: {0}")]
    ModelParams(String),

    #[error("invalid --support {0:?}: expected dim:lo:hi")]
    SupportSpec(String),

    #[error(transparent)]
    Estimation(#[from] arrogance::Error),

    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for a support violation, 4 when the method itself
    /// cannot produce an estimate from the data.
    pub fn exit_code(&self) -> i32 {
        use arrogance::Error as E;
        match self {
            CliError::Estimation(E::SupportViolation { .. }) => EXIT_SUPPORT,
            CliError::Estimation(
                E::InsufficientSamples { .. }
                | E::AllRatiosZero
                | E::NoPositiveCoverage
                | E::TooFewSamples { .. },
            ) => EXIT_METHOD,
            _ => EXIT_INPUT,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
