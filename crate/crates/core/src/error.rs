use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed file content. `line` and `column` are 1-based; a column of 0
    /// means the problem concerns the whole line.
    #[error("{path}:{line}:{column}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error(
        "the column-permutation null needs binary data; supply a block partition \
         or precomputed block distances to use the block pathway"
    )]
    NonBinaryEsif,

    #[error("chi-square mixture fit failed ({0}); use the permutation pathway instead")]
    MixtureFit(String),

    #[error("degenerate null distribution: {0}")]
    Degenerate(String),

    #[error("no informative columns: every column is monomorphic")]
    NoInformativeColumns,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(
        path: impl Into<PathBuf>,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Format {
            path: path.into(),
            line,
            column,
            message: message.into(),
        }
    }
}
