use std::io;

/// Errors produced by the engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("non-finite value in {context}")]
    Numeric { context: String },

    /// A solver failure annotated with where in the run it happened.
    #[error("step {step}{}: {source}", window.map(|w| format!(", window {w}")).unwrap_or_default())]
    Step {
        step: usize,
        window: Option<usize>,
        #[source]
        source: Box<Error>,
    },

    #[error("training diverged at step {step}")]
    Diverged { step: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}
