use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("conditioning on a vanishing rate ({rate:e})")]
    DegenerateConditioning { rate: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid projection: {0}")]
    InvalidProjection(String),

    #[error("state is not normalized (norm^2 = {0})")]
    Unnormalized(f64),

    #[error("integrator step underflow at t = {t} (dt = {dt:e})")]
    Stiffness { t: f64, dt: f64 },
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
