use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the region where the quantity is defined.
    #[error("{name} = {value} is outside the valid domain ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("expected {expected} power measurements, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// The linear system does not pin down a unique 2-D point.
    #[error("matrix is rank deficient (rank {rank}, need 2)")]
    RankDeficient { rank: usize },

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }

    /// True for failures that come from the numerics rather than from bad input.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::RankDeficient { .. } => true,
            Error::Trial { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(name, value, "must be finite and > 0"))
    }
}

pub(crate) fn ensure_nonneg(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(name, value, "must be finite and >= 0"))
    }
}
