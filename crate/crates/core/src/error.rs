use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimension mismatch, bad lengths, out-of-range values).
    #[error("input error: {0}")]
    Input(String),
    /// Evaluation outside the domain of an object.
    #[error("domain error: {0}")]
    Domain(String),
    /// A parameter lies outside the range where the requested quantity is defined.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A randomized or grid construction failed its certificate.
    #[error("construction error: {0}")]
    Construction(String),
    /// A numerical invariant that must hold by construction was violated.
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
