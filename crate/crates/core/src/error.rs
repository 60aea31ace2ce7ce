use thiserror::Error;

/// Errors raised by the library. Verification verdicts are reported, not raised;
/// these variants cover malformed inputs and broken internal invariants.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid residue b[{coordinate}] = {residue}: gcd with W = {w} is {gcd}")]
    InvalidResidue {
        coordinate: usize,
        residue: u64,
        w: u64,
        gcd: u64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical consistency error: {0}")]
    Numerical(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
