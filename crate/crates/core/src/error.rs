use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Pose/skeleton/graph shapes disagree.
    #[error("structure mismatch: {0}")]
    Structure(String),

    /// A value violates a documented invariant (non-positive scale, bad window, ...).
    #[error("invalid value: {0}")]
    Validation(String),

    /// Scene or params document does not follow the schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// Geometric degeneracy (too few points, coplanar cloud, coincident T-pose markers).
    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    /// Non-finite objective or other numerical breakdown.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Structure(_) => "structure",
            Error::Validation(_) => "validation",
            Error::Schema(_) => "schema",
            Error::Degenerate(_) => "degenerate",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
        }
    }

    /// Process exit code: schema-class problems 2, numerical 3, I/O 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Structure(_) | Error::Validation(_) | Error::Schema(_) => 2,
            Error::Degenerate(_) | Error::Numerical(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}
