use thiserror::Error;

/// Everything that can go wrong between ingesting samples and emitting an estimate.
///
/// Row numbers are 1-based and count data rows (a header, when present, is row 0).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("row {row}: expected {expected} coordinates, found {found}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}: non-finite {field}")]
    NonFiniteValue { row: usize, field: String },

    #[error("sample set is empty")]
    EmptySampleSet,

    #[error("samples must have at least one coordinate")]
    ZeroDimension,

    #[error("insufficient samples: N={total} leaves n_eval={n_eval} after m_hist={m_hist} and tuning={tuning} (need at least 2)")]
    InsufficientSamples {
        total: usize,
        m_hist: usize,
        tuning: usize,
        n_eval: usize,
    },

    #[error("dimension {dim} has zero sample standard deviation")]
    DegenerateDimension { dim: usize },

    #[error("no candidate bin width gives positive coverage of the tuning samples")]
    NoPositiveCoverage,

    #[error("occupied bin {bin:?} extends outside the declared support on dimension {dim}")]
    SupportViolation { bin: Vec<i64>, dim: usize },

    #[error("every estimation sample fell in an empty bin")]
    AllRatiosZero,

    #[error("at least {needed} samples required, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
