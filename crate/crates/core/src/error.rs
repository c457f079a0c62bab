use thiserror::Error;

/// Errors raised by the order-finding and certification toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{a} and {modulus} are not coprime (gcd = {gcd})")]
    NotCoprime { a: u64, modulus: u64, gcd: u64 },

    #[error("invalid order: {a}^{order} is not 1 mod {modulus}")]
    InvalidOrder { a: u64, order: u64, modulus: u64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("degenerate noise model: {0}")]
    DegenerateModel(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            Error::Io(e.to_string())
        } else {
            Error::InvalidArgument(e.to_string())
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.to_string())
        } else {
            Error::InvalidArgument(e.to_string())
        }
    }
}
