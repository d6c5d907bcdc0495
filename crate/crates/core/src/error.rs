use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum ChbError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("quadrature resolution {nq} along {axis} is below the anti-aliasing floor {floor}")]
    UnderResolved { axis: char, nq: usize, floor: usize },

    #[error("assumption ({code}) violated: {detail}")]
    Assumption { code: &'static str, detail: String },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("nonlinear solve failed at t = {t}: {detail}")]
    SolveFailed { t: f64, detail: String },

    #[error("config error at line {line}, column {column}: {message}")]
    Config { line: usize, column: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl ChbError {
    /// Validation failures map to exit code 1, everything else to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            ChbError::InvalidInput(_)
                | ChbError::UnderResolved { .. }
                | ChbError::Assumption { .. }
                | ChbError::Config { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, ChbError>;
