use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical solver did not converge or could not bracket a root.
    #[error("solver failure: {message} (iterations: {iterations}, residual: {residual:e})")]
    Solver {
        message: String,
        iterations: usize,
        residual: f64,
    },

    /// A study could not be constructed or simulated inside a sequential run.
    #[error("study {study}: {source}")]
    Study {
        study: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>, iterations: usize, residual: f64) -> Self {
        Error::Solver {
            message: msg.into(),
            iterations,
            residual,
        }
    }

    /// True for errors caused by bad inputs, as opposed to solver failures.
    pub fn is_domain(&self) -> bool {
        match self {
            Error::Domain(_) => true,
            Error::Solver { .. } => false,
            Error::Study { source, .. } => source.is_domain(),
        }
    }
}
