use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{qubits} qubits exceeds the simulator cap of {cap}")]
    QubitLimit { qubits: usize, cap: usize },

    #[error("post-selection starved: no shots kept{}", .context.as_ref().map(|c| format!(" ({c})")).unwrap_or_default())]
    PostSelectionStarved { context: Option<String> },

    #[error("gate {gate_index} blocks right check {right}")]
    CheckNotFound { right: String, gate_index: usize },

    #[error("gate is not Clifford: {0}")]
    NonClifford(String),

    #[error("degenerate calibration: f_hat = {0}")]
    DegenerateCalibration(f64),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
