use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("operator is not an orthogonal projector (deviation {0:.3e})")]
    NotProjector(f64),

    #[error("Kraus operators are not complete (max deviation from identity {0:.3e})")]
    Incomplete(f64),

    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("relaxation time must be positive, got {0}")]
    NonPositiveT1(f64),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("post-selection succeeded with zero probability")]
    EmptyPostSelection,

    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystems(String),

    #[error("Choi matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),

    #[error("Fock cutoff must be at least 1, got {0}")]
    FockCutoff(usize),

    #[error("unknown Bell-state label {0:?}")]
    UnknownLabel(String),

    #[error("invalid chain description: {0}")]
    InvalidChain(String),

    #[error("thermal correction factor {0} is not positive; first-order model is invalid")]
    CorrectionBreakdown(f64),

    #[error("target state is not pure (purity {0})")]
    NotPure(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}
