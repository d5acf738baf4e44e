use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid sample rate {found} Hz (expected {expected} Hz)")]
    InvalidSampleRate { expected: u32, found: u32 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("spectrum domain error: {0}")]
    DomainError(&'static str),
    #[error("invalid compression exponent {0}")]
    InvalidExponent(f64),
    #[error("backward called without a live forward cache")]
    StaleGraph,
    #[error("block of {0} samples exceeds one 480-sample hop")]
    OversizeBlock(usize),
    #[error("stream already received its final (short) block")]
    StreamClosed,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

macro_rules! shape_err {
    ($($arg:tt)*) => {
        $crate::Error::ShapeMismatch(alloc::format!($($arg)*))
    };
}
pub(crate) use shape_err;
