use thiserror::Error;

/// Errors produced by the relay simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("degenerate channel: column {user} has zero norm")]
    DegenerateChannel { user: usize },

    /// The Gram matrix of a ZF stage failed the relative pivot test.
    #[error("singular system: smallest/largest pivot ratio {pivot_ratio:e}")]
    SingularSystem { pivot_ratio: f64 },

    #[error("{quantity} requires M >= {min_antennas}, got M = {antennas}")]
    Domain {
        quantity: &'static str,
        min_antennas: usize,
        antennas: usize,
    },

    #[error("missing rate entry for user {user}, slot {slot}")]
    MissingEntry { user: usize, slot: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
