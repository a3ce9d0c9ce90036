use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Radicand of an extended Hamiltonian is not positive (spacelike argument).
    #[error("spacelike argument: radicand {radicand} <= 0")]
    Spacelike { radicand: f64 },

    /// An observable returned NaN or infinity.
    #[error("evaluation error: observable returned {value} at {context}")]
    Evaluation { value: f64, context: String },

    /// A trajectory step failed.
    #[error("trajectory aborted at step {step}: {source}")]
    Trajectory {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// Invalid configuration detected before any computation.
    #[error("configuration error: {0}")]
    Config(String),

    /// Numerical procedure failed to converge.
    #[error("numerical failure: {message}")]
    Numerical { message: String },

    /// Table ingestion failed; one entry per offending row.
    #[error("table parse error: {}", format_rows(.0))]
    Table(Vec<RowError>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    /// 1-based line number in the source file (0 when not tied to a row).
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

fn format_rows(rows: &[RowError]) -> String {
    rows.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical {
            message: msg.into(),
        }
    }
}
