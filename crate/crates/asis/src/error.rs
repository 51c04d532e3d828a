//! Shared error type for the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An operation that requires at least one set pixel got an empty mask.
    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    /// Two rasters that must share a grid do not.
    #[error("dimension mismatch: {context} ({left_w}x{left_h} vs {right_w}x{right_h})")]
    DimensionMismatch {
        context: &'static str,
        left_w: u32,
        left_h: u32,
        right_w: u32,
        right_h: u32,
    },

    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A caller violated an operation's contract (not a parameter range issue).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Scene generation could not satisfy the spec after bounded retries.
    #[error("scene generation failed: {0}")]
    Generation(String),

    /// A serialized artifact could not be parsed.
    #[error("parse error in {path}: {reason}")]
    Parse { path: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn image(path: impl Into<String>, source: image::ImageError) -> Self {
        Error::Image { path: path.into(), source }
    }

    pub fn parse(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
