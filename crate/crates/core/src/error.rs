use std::path::PathBuf;

use thiserror::Error;

use crate::checkpoint::ModelCheckpoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("input contains no triples")]
    EmptyInput,

    #[error("no candidate value left to sample for triple {triple}")]
    SamplingExhausted { triple: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("non-finite loss at triple {triple}")]
    NumericFault {
        triple: usize,
        /// Last checkpoint whose parameters were all finite, when training produced one.
        last_good: Option<Box<ModelCheckpoint>>,
    },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("unsupported checkpoint version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("rankings do not cover the same items: {0}")]
    Coverage(String),

    #[error("validation set needs at least one correct and one incorrect triple")]
    DegenerateValidation,

    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Process exit code for the command-line tool: 1 validation, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::DegenerateValidation => 1,
            Error::NumericFault { .. } => 3,
            _ => 2,
        }
    }
}
