use thiserror::Error;

/// Errors produced by model construction, fitting, and inference.
#[derive(Debug, Error)]
pub enum Error {
    /// A weight vector that cannot be normalized into a distribution
    /// (all zeros, or a negative entry).
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    /// An input outside the documented domain of an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A vector or matrix dimension that does not match its contract.
    #[error("shape mismatch in {what}: expected {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An operation that requires at least one example got none.
    #[error("empty data: {0}")]
    EmptyData(String),

    /// A symbol index outside the observation alphabet.
    #[error("unknown symbol index {index} for alphabet of size {alphabet_size}")]
    UnknownSymbol { index: usize, alphabet_size: usize },

    /// A sequence shorter than the classifier's model order allows.
    #[error("sequence too short: need at least {required} observations, got {got}")]
    SequenceTooShort { required: usize, got: usize },

    /// A zero entry where the classifier requires strictly positive tables.
    #[error("strict positivity violation: {0}")]
    StrictPositivity(String),

    /// A class label with no training observations.
    #[error("empty class: {0}")]
    EmptyClass(String),

    /// A malformed input file.
    #[error("format error{}: {message}", match line { Some(n) => format!(" at line {n}"), None => String::new() })]
    Format {
        line: Option<usize>,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// [`Error::Format`] from a 1-based line number (or `None`) and a message.
    pub(crate) fn format(line: impl Into<Option<usize>>, message: impl Into<String>) -> Self {
        Error::Format {
            line: line.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
