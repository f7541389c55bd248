use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Dimension is zero or not a multiple of 64.
    InvalidDimension(usize),
    DimensionMismatch { expected: usize, found: usize },
    LengthMismatch { expected: usize, found: usize },
    Empty(&'static str),
    /// Input has no usable direction (all zeros) or contains NaN/inf.
    DegenerateInput(&'static str),
    InvalidParameter(String),
    UnknownSymbol(String),
    DuplicateId(String),
    UnknownId(String),
    UnknownAttribute(String),
    MissingThreshold(String),
    MissingField(&'static str),
    ValueOutOfRange { what: &'static str, value: i64 },
    RegistryMismatch { expected: u64, found: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimension(d) => {
                write!(f, "invalid dimension {d}: must be a positive multiple of 64")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::LengthMismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
            Error::Empty(what) => write!(f, "{what} must not be empty"),
            Error::DegenerateInput(what) => write!(f, "degenerate input: {what}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::UnknownSymbol(s) => write!(f, "symbol {s:?} is not in the item memory"),
            Error::DuplicateId(id) => write!(f, "duplicate id {id:?}"),
            Error::UnknownId(id) => write!(f, "unknown id {id:?}"),
            Error::UnknownAttribute(a) => write!(f, "unknown attribute {a:?}"),
            Error::MissingThreshold(a) => write!(f, "no fuzziness threshold for attribute {a:?}"),
            Error::MissingField(name) => write!(f, "missing field {name}"),
            Error::ValueOutOfRange { what, value } => write!(f, "{what} value {value} out of range"),
            Error::RegistryMismatch { expected, found } => write!(
                f,
                "role registry mismatch: index built with {found:016x}, encoder has {expected:016x}"
            ),
        }
    }
}

impl core::error::Error for Error {}
