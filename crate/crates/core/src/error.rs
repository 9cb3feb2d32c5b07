use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the model.
    #[error("domain error: {0}")]
    Domain(String),

    /// The shot-noise level (sum of mean counts) is zero, so R is undefined.
    #[error("degenerate input: total mean count is zero, shot-noise level undefined")]
    Degenerate,

    /// The heralding event is too rare to sample by rejection.
    #[error("rejection timeout: herald acceptance probability {acceptance:.3e} is below {limit:.0e}")]
    RejectionTimeout { acceptance: f64, limit: f64 },

    #[error("invalid fit specification: {0}")]
    InvalidSpec(String),

    #[error("not enough degrees of freedom: {points} points for {free} free parameters")]
    DegreesOfFreedom { points: usize, free: usize },

    #[error("bracket does not enclose a sign change: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_unit_interval(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {value} must lie in [0, 1]")))
    }
}

pub(crate) fn ensure_open_unit(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {value} must lie in (0, 1]")))
    }
}

pub(crate) fn ensure_nonnegative(name: &str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {value} must be finite and nonnegative")))
    }
}

pub(crate) fn ensure_modes(name: &str, value: f64) -> Result<()> {
    if value >= 1.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {value} must be a finite mode count >= 1")))
    }
}
