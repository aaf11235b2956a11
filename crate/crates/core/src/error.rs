use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {t} is outside the simulated horizon [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },

    #[error("degenerate path: {0}")]
    DegeneratePath(&'static str),

    #[error("truncation at k = {truncation} leaves Poisson tail mass {tail_mass:e} (limit 1e-12)")]
    TailMass { truncation: u64, tail_mass: f64 },

    #[error("percentage variation is undefined for a zero baseline error")]
    UndefinedBaseline,

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

/// Fails with `InvalidParameter` unless `value` is finite and strictly positive.
pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {value}")))
    }
}
