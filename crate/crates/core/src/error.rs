use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("no data: {0}")]
    EmptyData(String),

    #[error("measurement plan does not cover elements {0:?}")]
    Coverage(Vec<(usize, usize)>),

    #[error("eigenvalues {0:?} lie outside the purification basin (-0.3, 1.3)")]
    OutsideBasin(Vec<f64>),

    #[error("no convergence after {iterations} iterations (idempotency score {score:e})")]
    NotConverged { iterations: usize, score: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_)
            | Error::Dimension { .. }
            | Error::Unsupported(_)
            | Error::Coverage(_)
            | Error::Parse { .. } => true,
            Error::AtIteration { source, .. } | Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

/// Attaches a human-readable location to an error.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| Error::Context {
            context: what(),
            source: Box::new(e),
        })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
