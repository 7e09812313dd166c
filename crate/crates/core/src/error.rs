use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid hyperparameters or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A call violated an operation's input contract.
    #[error("invalid input: {0}")]
    Usage(String),

    #[error("sample {id}: loss {loss} is not a finite non-negative number")]
    InvalidLoss { id: usize, loss: f64 },

    #[error("sample id {id} out of range for {len} samples")]
    IdOutOfRange { id: usize, len: usize },

    #[error("sample {id}: observation from epoch {epoch} precedes recorded epoch {seen}")]
    StaleObservation { id: usize, epoch: usize, seen: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    Diverged { epoch: usize, batch: usize, detail: String },

    #[error("{}:{line}: {msg}", path.display())]
    Csv { path: PathBuf, line: u64, msg: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Configuration errors map to exit code 1, everything else to 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            _ => 2,
        }
    }
}
