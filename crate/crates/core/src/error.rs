use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Sizes of operands do not agree, or a dimension is out of range.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A scalar argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The orthogonal complement of a square projector is empty.
    #[error("empty complement: projector is square ({0} x {0})")]
    EmptyComplement(usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient sampling: {0}")]
    Sampling(String),

    /// A formula was evaluated outside the regime where it applies.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed record data: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::Domain(_)
                | Error::EmptyComplement(_)
                | Error::DegenerateInput(_)
                | Error::Sampling(_)
                | Error::Precondition(_)
                | Error::Config(_)
        )
    }
}
