use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid bit string {0:?}: only '0' and '1' are allowed")]
    BadBitString(String),

    #[error("d must be odd and at least 3 (got {0})")]
    InvalidDistance(usize),

    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("gauge generators are linearly dependent (rank {rank} < {rows})")]
    DependentGenerators { rank: usize, rows: usize },

    #[error("full gauge span not materialized ({rows} generators exceed the span cap); use the exact method")]
    SpanNotMaterialized { rows: usize },

    #[error("{0}")]
    Invalid(String),

    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("record {index}: {msg}")]
    Verify { index: usize, msg: String },

    #[error("record count mismatch: header says {expected}, body has {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_prob(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::InvalidProbability(p))
    }
}
