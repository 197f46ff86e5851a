use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure of a library operation. Every variant carries the `module::op`
/// that raised it so the CLI can report where a run went wrong.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: domain error: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("{op}: loss of precision: {msg}")]
    Precision { op: &'static str, msg: String },

    #[error("{op}: unsupported geometry: {msg}")]
    Geometry { op: &'static str, msg: String },

    #[error("{op}: factorization failed (most negative eigenvalue ~ {min_eigenvalue:e}): {msg}")]
    Factorization { op: &'static str, min_eigenvalue: f64, msg: String },

    #[error("{op}: invalid state: {msg}")]
    State { op: &'static str, msg: String },

    #[error("{op}: precondition violated: {msg}")]
    Precondition { op: &'static str, msg: String },

    #[error("{op}: degenerate estimate: {msg}")]
    Degenerate { op: &'static str, msg: String },

    #[error("{op}: insufficient data: {msg}")]
    InsufficientData { op: &'static str, msg: String },
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain { op, msg: msg.into() }
    }

    pub(crate) fn geometry(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Geometry { op, msg: msg.into() }
    }

    pub(crate) fn precondition(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Precondition { op, msg: msg.into() }
    }

    /// True for failures of the numerics themselves (as opposed to bad
    /// parameters): factorization, precision loss, degenerate estimates.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Precision { .. } | Error::Factorization { .. } | Error::Degenerate { .. })
    }
}
