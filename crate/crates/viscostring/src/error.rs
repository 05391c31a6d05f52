use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code contract:
/// input/validation problems exit with 2, numeric failures with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("grid-too-coarse: {0}")]
    GridTooCoarse(String),

    #[error("eigensolver non-convergence at mode {mode}: {message}")]
    Eigensolver { mode: usize, message: String },

    #[error("step-size instability: {0}")]
    Instability(String),

    #[error("horizon-too-short: {0}")]
    HorizonTooShort(String),

    #[error("singular Gram matrix: {0}")]
    SingularGram(String),

    #[error("inconsistent grids: {0}")]
    GridMismatch(String),

    #[error("measurement failed for mode {mode}: {message}")]
    Measurement { mode: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code for the CLI contract: 2 = input/validation, 3 = numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::Validation(_)
            | Error::HorizonTooShort(_)
            | Error::GridMismatch(_)
            | Error::Io(_) => 2,
            Error::GridTooCoarse(_)
            | Error::Eigensolver { .. }
            | Error::Instability(_)
            | Error::SingularGram(_)
            | Error::Measurement { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
