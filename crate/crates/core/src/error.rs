use std::fmt;

/// Errors produced by the estimation library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// atan2 of the zero vector has no direction.
    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("curves live on incompatible grids ({left} vs {right} points)")]
    IncompatibleGrids { left: usize, right: usize },

    /// No training curve has positive kernel weight at the query.
    #[error("empty neighborhood at {query} (bandwidth {bandwidth} too small)")]
    EmptyNeighborhood { query: QueryLabel, bandwidth: f64 },

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("no candidate bandwidth gives a finite cross-validation score")]
    NoFeasibleBandwidth,

    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),

    #[error("parse error at row {row}{}: {message}", column.as_ref().map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        row: usize,
        column: Option<String>,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attach a query label (e.g. the id of the curve being predicted) to an
    /// empty-neighborhood error. Other variants pass through unchanged.
    pub fn with_query(self, label: impl Into<String>) -> Self {
        match self {
            Error::EmptyNeighborhood { bandwidth, .. } => Error::EmptyNeighborhood {
                query: QueryLabel(Some(label.into())),
                bandwidth,
            },
            other => other,
        }
    }
}

/// Optional label of the curve at which an estimate was requested.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryLabel(pub Option<String>);

impl fmt::Display for QueryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some(id) => write!(f, "query curve `{id}`"),
            None => f.write_str("unlabeled query curve"),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
