use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("near-singular arguments: {0}")]
    NearSingular(String),
    #[error("singular block: {0}")]
    Singular(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("branch error: {0}")]
    Branch(String),
    #[error("integration error: {0}")]
    Integration(String),
    #[error("conditioning error: {0}")]
    Conditioning(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

impl Error {
    /// True for failures of the numerics, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_)
                | Error::Integration(_)
                | Error::Conditioning(_)
                | Error::Assembly(_)
                | Error::Consistency(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
