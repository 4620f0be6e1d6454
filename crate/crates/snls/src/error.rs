use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("grid of {got} points is incompatible with the mode set ({expect} points expected)")]
    GridMismatch { got: usize, expect: usize },

    #[error("field does not belong to the expected torus")]
    SpecMismatch,

    #[error("scheme `{scheme}` is incompatible with noise mode `{noise}`")]
    SchemeNoiseMismatch { scheme: String, noise: String },

    #[error("solver is stopped (cutoff support exhausted at t = {tau})")]
    Stopped { tau: f64 },

    #[error("field blew up (non-finite values) at t = {t}")]
    BlowUp { t: f64 },

    #[error("trajectory is not uniformly sampled")]
    NonUniformTrajectory,

    #[error("configuration is invalid:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("malformed file `{path}`: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
