use std::path::PathBuf;

use thiserror::Error;

/// Broad failure category, used by the command-line front end to pick a
/// stable exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorKind {
    Schema,
    Domain,
    Numerical,
    Io,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Schema => "schema",
            ErrorKind::Domain => "value-domain",
            ErrorKind::Numerical => "numerical",
            ErrorKind::Io => "io",
        }
    }

    /// Process exit code for this category.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Schema => 3,
            ErrorKind::Domain => 4,
            ErrorKind::Numerical => 5,
            ErrorKind::Io => 6,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("area index {index} out of range for {n_areas} areas")]
    AreaOutOfRange { index: usize, n_areas: usize },

    #[error("self-loop on area {0}")]
    SelfLoop(usize),

    #[error("area {0} has no neighbours")]
    IsolatedArea(usize),

    #[error("edge index {index} out of range for {n_edges} edges")]
    EdgeOutOfRange { index: usize, n_edges: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid value for {name}: {detail}")]
    Domain { name: &'static str, detail: String },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("sparsity pattern does not match the analysed factor")]
    PatternMismatch,

    #[error("linear predictor overflow at cell (area {area}, time {time}): {value}")]
    PredictorOverflow {
        area: usize,
        time: usize,
        value: f64,
    },

    #[error("zero expected count at cell (area {area}, time {time})")]
    ZeroExpected { area: usize, time: usize },

    #[error("{0}")]
    Numerical(String),

    #[error("model has no estimated boundaries")]
    NoBoundaries,

    #[error("chain stuck: {family} acceptance {rate} over window ending at iteration {iteration}")]
    StuckChain {
        family: String,
        rate: f64,
        iteration: usize,
    },

    #[error("schema error in {source_name}: {detail}")]
    Schema { source_name: String, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Schema { .. } => ErrorKind::Schema,
            Error::Io { .. } => ErrorKind::Io,
            Error::NotPositiveDefinite { .. }
            | Error::PredictorOverflow { .. }
            | Error::Numerical(_)
            | Error::StuckChain { .. } => ErrorKind::Numerical,
            _ => ErrorKind::Domain,
        }
    }

    pub fn domain(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            name,
            detail: detail.into(),
        }
    }

    pub fn schema(source_name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Schema {
            source_name: source_name.into(),
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
