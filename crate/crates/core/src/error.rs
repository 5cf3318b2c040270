use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input had the wrong number of coordinates or entries.
    DimensionMismatch { expected: usize, found: usize },
    /// A network architecture failed validation.
    InvalidArchitecture(String),
    /// A grid, domain or step count failed validation.
    InvalidGrid(String),
    /// A model specification failed validation.
    InvalidModel(String),
    /// An operation was applied to the wrong kind of model.
    WrongModelKind(&'static str),
    /// A region id is not known to the model or grid.
    UnknownRegion(String),
    /// A NaN or infinity appeared while evaluating `region` at point `index`.
    NonFinite { region: String, index: usize },
    /// A reference field has zero norm, so relative errors are undefined.
    ZeroReferenceNorm,
    /// Parameter vector or layer shapes disagree with the architecture.
    ShapeMismatch(String),
    /// Invalid argument to a closed-form or finite-difference routine.
    InvalidArgument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidArchitecture(m) => write!(f, "invalid architecture: {m}"),
            Error::InvalidGrid(m) => write!(f, "invalid grid: {m}"),
            Error::InvalidModel(m) => write!(f, "invalid model: {m}"),
            Error::WrongModelKind(m) => write!(f, "wrong model kind: {m}"),
            Error::UnknownRegion(r) => write!(f, "unknown region `{r}`"),
            Error::NonFinite { region, index } => {
                write!(f, "non-finite value in region `{region}` at point {index}")
            }
            Error::ZeroReferenceNorm => write!(f, "reference field has zero norm"),
            Error::ShapeMismatch(m) => write!(f, "shape mismatch: {m}"),
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
