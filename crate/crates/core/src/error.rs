use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An argument fell outside the set where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// The measure is a single point mass; the caller must use the exact formula.
    #[error("measure is a Dirac mass at {0}")]
    DiracDegenerate(f64),
    #[error("precision loss: {0}")]
    Precision(String),
    /// A logarithm argument left the principal-branch half plane.
    #[error("branch violation: {0}")]
    Branch(String),
    #[error("overflow guard: {0}")]
    Overflow(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Domain(_) => "domain",
            Error::NoConvergence(_) => "no_convergence",
            Error::DiracDegenerate(_) => "dirac_degenerate",
            Error::Precision(_) => "precision",
            Error::Branch(_) => "branch",
            Error::Overflow(_) => "overflow",
            Error::Parse(_) => "parse",
        }
    }
}
