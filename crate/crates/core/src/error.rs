use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the parameters or the data was violated.
    #[error("{module}: {message}")]
    Domain {
        module: &'static str,
        message: String,
    },

    /// The explicit step kept producing negative values after the maximum
    /// number of time-step halvings.
    #[error("pme_solver: step at t = {t} rejected {rejections} times (min value {min_value:e})")]
    Stability {
        t: f64,
        rejections: usize,
        min_value: f64,
    },

    #[error("verification: need at least {needed} snapshots, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("verification: {0}")]
    Degenerate(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn domain(module: &'static str, message: impl Into<String>) -> Error {
    Error::Domain {
        module,
        message: message.into(),
    }
}
