use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {0} out of range, expected 1, 2 or 3")]
    ModeOutOfRange(usize),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("non-finite value {value} at linear index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("band {band} has zero mean in the reference cube")]
    DegenerateBand { band: usize },

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn arg_err(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
