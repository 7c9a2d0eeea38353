use thiserror::Error;

/// Errors raised by process construction and validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invariant measure is not unique: {0}")]
    Ambiguous(String),

    #[error("incompatible marginals (max deviation {max_deviation:e})")]
    Incompatible { max_deviation: f64 },

    #[error("measure is not invariant for the transition matrix (residual {residual:e})")]
    NotStationary { residual: f64 },

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error("absorbing state: {0}")]
    Absorbing(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("outside the admissible region: {0}")]
    Region(String),

    #[error("map is not contractive (spectral radius {0})")]
    NonContractive(f64),

    #[error("singular resolvent at theta = {0}")]
    Spectral(f64),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
