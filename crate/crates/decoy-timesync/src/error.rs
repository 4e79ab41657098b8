use thiserror::Error;

/// Errors surfaced by configuration parsing, simulation, and recovery.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration file violates a documented constraint.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    /// Inputs to an operation are structurally inconsistent (e.g. mismatched lengths).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A correlation series is too short for the requested statistic.
    #[error("too few lags: {0}")]
    TooFewLags(String),
    /// A series has zero spread, so a sigma-multiple is undefined.
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    /// Total detection probability is zero, so the error ratio is undefined.
    #[error("undefined qber: {0}")]
    UndefinedQber(String),
    /// A hardware budget cannot accommodate the requested block.
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
