use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed bar: {0}")]
    MalformedBar(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("series length mismatch ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("correlation {0} is outside [-1, 1]")]
    Domain(f64),

    #[error("phi is not strictly increasing at grid index {index} (rho = {rho})")]
    NonMonotonePhi { index: usize, rho: f64 },

    #[error("invalid phi grid step {0}; expected 0 < step <= 0.01")]
    InvalidStep(f64),

    #[error("phi table parse error at line {line}: {message}")]
    PhiTableParse { line: usize, message: String },

    #[error("linear system is numerically singular")]
    SingularSystem,

    #[error("quadrature did not converge: estimated error {error:e} after {subdivisions} subdivisions")]
    Quadrature { error: f64, subdivisions: usize },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonMonotonePhi { .. } | Error::SingularSystem | Error::Quadrature { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
