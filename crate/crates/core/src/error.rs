use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index out of range: {0}")]
    InvalidIndex(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("not a tripartite quartic: {0}")]
    NotTripartite(String),

    #[error("certificate does not verify: {0}")]
    InvalidCertificate(String),

    #[error("point is not a zero of the form (value {value:e}, threshold {threshold:e})")]
    NotAZero { value: f64, threshold: f64 },

    #[error("form is not positive definite (sphere minimum {min:e})")]
    NotPositiveDefinite { min: f64 },

    #[error("form is not psd (sphere minimum {min:e})")]
    NotPsdForm { min: f64 },

    #[error("matrix is not psd (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error("polynomial cannot come from a 2x1x1 form: {0}")]
    NotFromForm211(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("target has monomials outside the Gram basis span: {0}")]
    NotRepresentable(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
