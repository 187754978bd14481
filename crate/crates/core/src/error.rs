use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("eta prefactor d*e/24 is not integral (d = {dilation}, e = {exponent})")]
    NonIntegralPrefactor { dilation: u64, exponent: i64 },
    #[error("leading coefficient is not a unit")]
    NonUnitLeadingTerm,
    #[error("imaginary part must be positive, got {0}")]
    NonPositiveImaginaryPart(f64),
    #[error("gamma has a pole at the non-positive integer {0}")]
    PoleAtNonPositiveInteger(i64),
    #[error("incomplete gamma needs x > 0, got {0}")]
    NonPositiveX(f64),
    #[error("epsilon_d is only defined for odd d, got {0}")]
    EvenArgument(i64),
    #[error("quadratic symbol ({c}/{d}) is undefined")]
    UndefinedSymbol { c: i64, d: i64 },
    #[error("cusp {p}/{q} is not equivalent to infinity for level {level}")]
    InvalidCusp { p: i64, q: i64, level: u64 },
    #[error("the twist root number needs odd p, got p = {0}")]
    OddityViolation(i64),
    #[error("twist {p}/{q} is not involutive (p^2 != 1 mod q)")]
    NonInvolutiveTwist { p: i64, q: i64 },
    #[error("integration failed: {0}")]
    IntegrationFailure(String),
    #[error("averaged form has no non-zero coefficient up to n = {0}")]
    DegenerateAveragedForm(usize),
    #[error("zero of the function suspected on the rectangle boundary")]
    BoundaryZeroSuspected,
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("need {needed} coefficients but only {available} are stored")]
    InsufficientCoefficients { needed: usize, available: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Domain errors map to CLI exit code 1, everything else to 2.
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::InvalidInput(_) | Error::Io(_) | Error::Parse(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
