use thiserror::Error;

/// Errors raised by the engine, the scenario builders and the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("operator is not unitary (max |U†U - I| = {0:e})")]
    NotUnitary(f64),
    #[error("basis is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("superposition norm {0} is not 1 within tolerance")]
    NotNormalized(f64),
    #[error("superposition is the zero vector")]
    ZeroVector,
    #[error("conditioning event has probability {0:e}")]
    ZeroProbability(f64),
    #[error("condition and target projectors do not commute (|[P, Q]| = {0:e})")]
    NonCommuting(f64),
    #[error("partition elements {0} and {1} are not orthogonal")]
    NonOrthogonal(usize, usize),
    #[error("partition is not exhaustive: Born weights sum to {0}")]
    NonExhaustive(f64),
    #[error("missing correlation for pair {0}")]
    MissingPair(String),
    #[error("inconsistent duplicate constraint for {0}")]
    DuplicateConstraint(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid time t = {0} (valid range 0..=5)")]
    InvalidTime(u32),
    #[error("numerical contract violated: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures of a numerical contract (norm drift, bad witness,
    /// reference-state mismatch) as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::NotUnitary(_) | Error::NotNormalized(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
