use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpcrError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The objective stopped being finite during a fit.
    #[error("objective became non-finite after the {block} update in sweep {sweep}")]
    Diverged { block: &'static str, sweep: usize },

    #[error("csv error at {location}: {message}")]
    Csv { location: String, message: String },

    #[error("unknown simulation case '{0}' (expected one of 1a, 1b, 2, 3a, 3b)")]
    UnknownCase(String),

    #[error("unknown method '{0}' (expected one of spcr, aspcr, pcr)")]
    UnknownMethod(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SpcrError>;
