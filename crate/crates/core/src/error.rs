use thiserror::Error;

/// Failures surfaced by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0}")]
    InvalidParams(String),

    /// The series tail bound could not be pushed below `abs_tol` within `max_terms` terms.
    #[error("tolerance {abs_tol:e} not reachable within {max_terms} series terms")]
    TolUnreachable { abs_tol: f64, max_terms: usize },

    #[error("theta equation has no sign change on [{lo}, {hi}] (f(lo) = {f_lo:e}, f(hi) = {f_hi:e})")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no admissible index found up to cap {cap}")]
    NotFound { cap: u64 },

    /// `sin(n y - beta pi / 2)` vanishes, so the sign-split eigenvalue formulas do not apply.
    #[error("sin(n y - beta pi/2) = {value:e} is numerically zero")]
    SignDegenerate { value: f64 },

    #[error("interpolation system is singular (condition estimate {condition:e})")]
    SingularSystem { condition: f64 },
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::TolUnreachable { .. } => "TolUnreachable",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::Domain(_) => "DomainError",
            Error::NotFound { .. } => "NotFound",
            Error::SignDegenerate { .. } => "SignDegenerate",
            Error::SingularSystem { .. } => "SingularSystem",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
