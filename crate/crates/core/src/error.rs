use thiserror::Error;

/// Errors surfaced by the numerical routines.
///
/// Contract violations (dimension mismatches, bad preconditions that
/// indicate programmer error) panic instead; these variants cover data-
/// and numerics-dependent failures a caller may want to handle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("numerical overflow during integration")]
    Overflow,

    #[error("matrix is singular or rank-deficient")]
    Singular,

    #[error("reference weights have zero norm")]
    ZeroReference,

    #[error("autonomous run diverged at step {step} (|v| = {value:e})")]
    Diverged { step: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

pub type Result<T> = std::result::Result<T, Error>;
