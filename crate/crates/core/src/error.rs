use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function has a pole at {0}")]
    GammaPole(f64),

    #[error("{name} = {value} is outside the admissible range {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("the two points coincide")]
    CoincidentPoints,

    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("quadrature did not converge: value {value:e}, error estimate {error:e}")]
    NonConvergent { value: f64, error: f64 },

    #[error("singularity of order {exponent} is not integrable in dimension {dim}")]
    NonIntegrable { exponent: f64, dim: usize },

    #[error("weight has zero mass on the ball of radius {0}")]
    ZeroBallMass(f64),

    #[error("need at least {min} samples, got {got}")]
    InsufficientSamples { min: usize, got: usize },

    #[error("empty sample set: {0}")]
    EmptySamples(&'static str),

    #[error("invalid {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn ensure_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
