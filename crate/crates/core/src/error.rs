use thiserror::Error;

use crate::quadrature::QuadratureError;

/// Errors produced by the analytic and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {name}: {value} ({reason})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("{name} = {value} is outside [{lower}, {upper}]")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("variance {value} is negative beyond tolerance; moments are inconsistent")]
    NegativeVariance { value: f64 },
    #[error("arrival times are not sorted at index {index}")]
    UnsortedArrivals { index: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and nonnegative",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}

pub(crate) fn check_range(name: &'static str, value: f64, lower: f64, upper: f64) -> Result<()> {
    if value >= lower && value <= upper {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name,
            value,
            lower,
            upper,
        })
    }
}
