use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] pce_core::Error),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("io: {0}")]
    Io(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("cell ({n}, {depth}): {msg}")]
    Cell { n: usize, depth: usize, msg: String },
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}
