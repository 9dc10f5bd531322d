use std::path::Path;

/// Harness-level failures. Config and ingestion problems map to exit code 2;
/// library errors bubble up as ordinary failures (exit 1). An infeasible
/// privacy target is not an error: sweeps mark the affected records and the
/// binary signals it with exit code 3 after emitting results.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Lib(#[from] invsens::Error),
}

impl BenchError {
    pub fn config(msg: impl Into<String>) -> Self {
        BenchError::Config(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        BenchError::Io { path: path.display().to_string(), source }
    }

    /// Process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Io { .. } => 2,
            BenchError::Lib(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
