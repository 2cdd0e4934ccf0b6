use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FactorError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical failure: {message} (best residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("spike {alpha} is below the detection threshold {threshold}")]
    SubCritical { alpha: f64, threshold: f64 },

    #[error("eigenvalue {value} lies inside the bulk (right edge {edge})")]
    NotASpike { value: f64, edge: f64 },

    #[error("spike {alpha} coincides with bulk atom {atom}")]
    Singularity { alpha: f64, atom: f64 },

    #[error("contour integral has residual imaginary part {0:e}")]
    Contour(f64),
}

impl FactorError {
    pub(crate) fn numerical(message: impl Into<String>, residual: f64) -> Self {
        FactorError::Numerical {
            message: message.into(),
            residual,
        }
    }

    /// True for errors caused by the caller's data rather than by a solver.
    pub fn is_input_error(&self) -> bool {
        matches!(self, FactorError::Dimension(_) | FactorError::Input(_))
    }
}

pub type Result<T> = std::result::Result<T, FactorError>;
