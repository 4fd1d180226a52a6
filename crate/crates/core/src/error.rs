//! Error types shared across the toolkit.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Configuration problems: missing roots, bad ratios, unreachable
    /// endpoints with bad credentials. These map to process exit code 2.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Syntax-tree construction failed for a file; the caller skips the
    /// file and increments its warning counter.
    #[error("failed to parse {0}")]
    Parse(PathBuf),

    #[error("javadoc summary empty after stripping")]
    EmptySummary,

    /// No records survived the eval-set LOC filter.
    #[error("eval selection is empty: no records with loc >= {min_loc}")]
    EmptySelection { min_loc: usize },

    #[error("unknown document id: {0}")]
    UnknownDoc(String),

    #[error("empty reference summary; pair cannot be scored")]
    EmptyReference,

    /// Stage-2 summarize prompt requires a non-empty stage-1 explanation.
    #[error("stage-1 output is empty; stage-2 prompt skipped")]
    EmptyStageOne,

    #[error("generation failed after {attempts} attempt(s): {message}")]
    Generation { attempts: u32, message: String },

    #[error("sample too small for {test}: need at least {min} values per side")]
    SampleTooSmall { test: &'static str, min: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code the CLI maps this error to: 2 for configuration
    /// problems, 1 for recoverable data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }
}
