use thiserror::Error;

/// Errors raised while building, solving or analysing a loading problem.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("{field}: {message}")]
    Field { field: String, message: String },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("coordinate {x} outside the fuselage [-{half}, {half}]")]
    CoordinateOutOfRange { x: f64, half: f64 },

    #[error("invalid slack bound: {0}")]
    InvalidSlack(String),

    #[error("invalid penalty weights: {0}")]
    InvalidWeights(String),

    #[error("bit vector has length {got}, model expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("model has no variables")]
    EmptyModel,

    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),

    #[error("search space too large for exact enumeration ({vars} position variables > {limit}); use force to override")]
    Intractable { vars: usize, limit: usize },

    #[error("unknown container id {0}")]
    UnknownContainer(u32),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}
