use alloc::string::String;
use core::fmt;

/// Errors reported by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid or image dimensions do not satisfy an operation's requirements.
    Shape(String),
    /// A parameter is outside its admissible range.
    InvalidParam(String),
    /// A filter coefficient file could not be parsed.
    FilterParse(String),
    /// Too little data for the requested statistic.
    InsufficientData(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(m) => write!(f, "shape error: {m}"),
            Error::InvalidParam(m) => write!(f, "invalid parameter: {m}"),
            Error::FilterParse(m) => write!(f, "filter parse error: {m}"),
            Error::InsufficientData(m) => write!(f, "insufficient data: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

macro_rules! shape_err {
    ($($t:tt)*) => { $crate::error::Error::Shape(alloc::format!($($t)*)) };
}
macro_rules! param_err {
    ($($t:tt)*) => { $crate::error::Error::InvalidParam(alloc::format!($($t)*)) };
}
pub(crate) use {param_err, shape_err};
