use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A size limit was exceeded (register width, dense cap, ancilla pool).
    #[error("capacity: {0}")]
    Capacity(String),

    /// Malformed gate, circuit or layout (bad qubit reference, overlap, width mismatch).
    #[error("structural: {0}")]
    Structural(String),

    #[error("numerical: {0}")]
    Numerical(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// The controller produced an output no valid controller can produce.
    #[error("corrupt controller: {0}")]
    CorruptController(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid choice: {0}")]
    InvalidChoice(String),

    #[error("episode state: {0}")]
    State(String),

    #[error("ask policy exhausted at step {step}")]
    Policy { step: usize },

    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    /// Short machine-readable code used by the live protocol.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Capacity(_) => "capacity",
            Error::Structural(_) => "structural",
            Error::Numerical(_) => "numerical",
            Error::Parse { .. } => "parse",
            Error::CorruptController(_) => "corrupt_controller",
            Error::Contract(_) => "contract",
            Error::InvalidChoice(_) => "invalid_choice",
            Error::State(_) => "state",
            Error::Policy { .. } => "policy",
            Error::Trace { .. } => "trace",
        }
    }
}
