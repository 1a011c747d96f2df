use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A measure or barrier does not fit the domain it is used on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model parameter lies outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A call argument is malformed (unsorted nodes, negative weights, bad times, ...).
    #[error("argument error: {0}")]
    Argument(String),

    /// An operation was applied to a grid or form of the wrong shape.
    #[error("shape error: {0}")]
    Shape(String),

    /// A cell of the grid carries no resistance, so its conductance would be infinite.
    #[error("assembly error: cell {cell} on [{left}, {right}] has zero resistance increment")]
    Assembly { cell: usize, left: f64, right: f64 },

    /// Linear-algebra breakdown or non-finite values during time stepping.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An internal invariant of a form or process was violated.
    #[error("invariant violation: {0}")]
    Invariant(String),

    /// A requested computation exceeds the configured resource guard.
    #[error("resource error: {0}")]
    Resource(String),

    /// The sweep grid cannot resolve the barrier.
    #[error("barrier resolution refused: {cells} cells inside the barrier, at least {required} required")]
    Resolution { cells: usize, required: usize },

    /// A configuration file failed validation.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Parameter(_)
            | Error::Argument(_)
            | Error::Shape(_)
            | Error::Config { .. }
            | Error::Resolution { .. }
            | Error::Resource(_) => 2,
            Error::Assembly { .. } | Error::Numerical(_) | Error::Invariant(_) => 3,
            Error::Io { .. } | Error::Csv(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
