use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
    #[error("matrix is not symmetric positive definite")]
    NotSpd,
    #[error("leading block is singular at working tolerance")]
    SingularBlock,
    #[error("observation matrix is singular")]
    SingularH,
    #[error("constraint matrix is rank deficient: rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("innovation matrix A2·Cov·A2ᵀ is singular; new constraints are not informative")]
    SingularW,
    #[error("rotation angle too close to pi ({angle} rad)")]
    NearPiRotation { angle: f64 },
    #[error("rotation matrix is not orthonormal (error {error:e})")]
    NotOrthonormal { error: f64 },
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("constraint evaluation failed: {0}")]
    EvaluationFailure(String),
    #[error("solver did not converge after {iterations} iterations (kkt residual {kkt_residual:e})")]
    NoConvergence { iterations: usize, kkt_residual: f64 },
    #[error("solution carries no covariance")]
    MissingCovariance,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::NotSpd => "not_spd",
            Error::SingularBlock => "singular_block",
            Error::SingularH => "singular_h",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::SingularW => "singular_w",
            Error::NearPiRotation { .. } => "near_pi_rotation",
            Error::NotOrthonormal { .. } => "not_orthonormal",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::EvaluationFailure(_) => "evaluation_failure",
            Error::NoConvergence { .. } => "no_convergence",
            Error::MissingCovariance => "missing_covariance",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(op: &'static str, expected: impl ToString, got: impl ToString) -> Error {
    Error::DimensionMismatch {
        op,
        expected: expected.to_string(),
        got: got.to_string(),
    }
}
