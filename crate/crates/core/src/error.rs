use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("duplicate timestamp {time} (line {line})")]
    DuplicateTime { time: f64, line: u64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite state at step {step}")]
    Divergence { step: usize },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("not identifiable: {0}")]
    Identifiability(String),

    /// The optimizer gave up; `best` holds the best parameter vector seen.
    #[error("fit did not converge: {message} (best objective {objective})")]
    Fit {
        message: String,
        best: Vec<f64>,
        objective: f64,
    },

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI on standard error.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::InsufficientData(_) => "insufficient-data",
            Error::DuplicateTime { .. } => "duplicate-time",
            Error::Parameter(_) => "parameter",
            Error::Data(_) => "data",
            Error::Domain(_) => "domain",
            Error::Divergence { .. } => "divergence",
            Error::Evaluation(_) => "evaluation",
            Error::Singularity(_) => "singularity",
            Error::Identifiability(_) => "identifiability",
            Error::Fit { .. } => "fit",
            Error::Size(_) => "size",
            Error::Undefined(_) => "undefined",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
