use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{total} spins exceed the configured maximum of {max}")]
    TooManySpins { total: usize, max: usize },

    #[error("operator is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension {0} is not a power of two >= 2")]
    BadDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("schedule `{label}` failed verification: fidelity {fidelity:.12}")]
    VerificationFailed { label: String, fidelity: f64 },

    #[error("zero-norm operator in fidelity")]
    ZeroNorm,

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
