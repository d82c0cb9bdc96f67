use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid parameters or flags; the caller asked for something ill-posed.
    #[error("configuration error: {0}")]
    Config(String),

    /// A scan ran off the end of the path before the requested structure existed.
    #[error("horizon too short: {context} (deepest running minimum {deepest_value} at index {deepest_index})")]
    Horizon {
        context: String,
        deepest_index: usize,
        deepest_value: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// The request is well-posed but exceeds a size or accuracy cap.
    #[error("numerical feasibility: {0}")]
    Feasibility(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn feasibility(msg: impl Into<String>) -> Self {
        Error::Feasibility(msg.into())
    }
}
