use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by every stage of the embedding pipeline.
#[derive(Debug, Error)]
pub enum MileError {
    #[error("edge ({u}, {v}) has non-positive or non-finite weight {w}")]
    WeightDomain { u: usize, v: usize, w: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("no edge between {u} and {v}")]
    AbsentEdge { u: usize, v: usize },

    #[error("inconsistent matching: {0}")]
    Consistency(String),

    #[error("{}:{line}: {msg}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Format {
        path: Option<PathBuf>,
        line: usize,
        msg: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl MileError {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        MileError::Format {
            path: None,
            line,
            msg: msg.into(),
        }
    }

    /// Attaches a file path to a format error raised by a reader.
    pub fn with_path(self, p: impl Into<PathBuf>) -> Self {
        match self {
            MileError::Format { line, msg, .. } => MileError::Format {
                path: Some(p.into()),
                line,
                msg,
            },
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MileError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = MileError> = std::result::Result<T, E>;
