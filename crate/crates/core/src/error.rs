use thiserror::Error;

/// Errors raised by the simulator and the algorithms running on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    /// Every live PE is blocked and none can make progress.
    #[error("deadlock: {}", describe_blocked(.blocked))]
    Deadlock { blocked: Vec<(usize, String)> },

    #[error("collective mismatch: PE {pe} entered {got} while PEs {waiting:?} wait in {expected}")]
    CollectiveMismatch {
        pe: usize,
        got: String,
        expected: String,
        waiting: Vec<usize>,
    },

    #[error("{op}: vector lengths differ across PEs (words per PE: {words:?})")]
    SizeMismatch { op: String, words: Vec<usize> },

    #[error("PE {pe} received a message of an unexpected type from PE {from}")]
    TypeMismatch { pe: usize, from: usize },

    #[error("PE {pe} panicked: {message}")]
    PePanicked { pe: usize, message: String },

    #[error("requested {requested} elements but the queue holds {size}")]
    QueueUnderflow { requested: u64, size: u64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io: {0}")]
    Io(String),
}

fn describe_blocked(blocked: &[(usize, String)]) -> String {
    blocked
        .iter()
        .map(|(pe, what)| format!("PE {pe} {what}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Param(msg.into()))
}
