use thiserror::Error;

/// Errors produced by the detection library.
#[derive(Debug, Error)]
pub enum Error {
    /// A box violated the canonical-corner invariant (x1 < x2, y1 < y2, finite).
    #[error("degenerate box: {0}")]
    DegenerateBox(String),

    /// Invalid or inconsistent configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// Shape mismatch between tensors or between tensors and configuration.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// NaN or non-finite value where a finite one is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Dataset record failed validation.
    #[error("invalid record {id}: {reason}")]
    InvalidRecord { id: String, reason: String },

    /// Dataset/manifest schema violation.
    #[error("schema error: {0}")]
    Schema(String),

    /// Unknown class name or out-of-range class index.
    #[error("unknown class: {0}")]
    UnknownClass(String),

    /// Checkpoint container is malformed or has an unsupported version.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Training diverged (loss exploded past the divergence threshold).
    #[error("training diverged: {0}")]
    Diverged(String),

    /// I/O error with path context.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Underlying JSON parse/serialize error.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Underlying XML parse error.
    #[error("xml error: {0}")]
    Xml(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category for CLI error lines.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DegenerateBox(_) => "degenerate-box",
            Error::Config(_) => "config",
            Error::Shape(_) => "shape",
            Error::NonFinite(_) => "non-finite",
            Error::InvalidRecord { .. } => "invalid-record",
            Error::Schema(_) => "schema",
            Error::UnknownClass(_) => "unknown-class",
            Error::Checkpoint(_) => "checkpoint",
            Error::Diverged(_) => "diverged",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Xml(_) => "xml",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
