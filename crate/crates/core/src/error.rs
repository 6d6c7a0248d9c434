use thiserror::Error;

/// Errors raised by the cocycle laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix product overflowed (entry {0:e}); use log-scaled iteration")]
    Overflow(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("continued fraction lost precision at level {level} (alpha_{level} = {value:e})")]
    PrecisionExhausted { level: usize, value: f64 },

    #[error("angle continuation needed more than {max_steps} steps")]
    Resolution { max_steps: usize },

    #[error("rotation number requires degree 0, found degree {degree}")]
    DegreeObstruction { degree: i64 },

    #[error("small divisor |1 - exp(2 pi i k alpha)| = {divisor:e} at k = {k}")]
    SmallDivisor { k: i64, divisor: f64 },

    #[error("budget exceeded at depth {depth}: {needed} products per point (limit {limit})")]
    Budget { depth: usize, needed: u64, limit: u64 },

    #[error("base change matrix has determinant {0}, expected +1 or -1")]
    InvalidBase(i64),

    #[error("invalid rescaling factor {0}")]
    InvalidScale(f64),

    #[error("unsupported representation: {0}")]
    Representation(String),

    #[error("scan range [{min}, {max}] does not cover the inclusion interval [{need_min}, {need_max}]")]
    Range {
        min: f64,
        max: f64,
        need_min: f64,
        need_max: f64,
    },

    #[error("conjugacy is singular at x = {0}")]
    DegenerateConjugacy(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget { .. } | Error::Resolution { .. } => 3,
            Error::PrecisionExhausted { .. } | Error::Overflow(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
