use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot read {path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("duplicate firm-year key (firm_id={firm_id}, year={year})")]
    DuplicateKey { firm_id: String, year: i32 },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("temperature {0} is not finite")]
    Domain(f64),

    #[error("fixed-effect absorption did not converge after {iterations} iterations (last change {last_change:e})")]
    Convergence { iterations: usize, last_change: f64 },

    #[error("estimation sample is empty")]
    EmptySample,

    #[error("design matrix has no estimable columns")]
    Rank,

    #[error("residual degrees of freedom exhausted (n={n}, k={k}, m={m})")]
    DofExhausted { n: usize, k: usize, m: usize },

    #[error("cluster-robust covariance needs at least 2 clusters, got {0}")]
    InsufficientClusters(usize),

    #[error("{context}: {source}")]
    Spec {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the name of the regression spec that raised it.
    pub fn in_spec(self, context: impl Into<String>) -> Error {
        Error::Spec {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical estimation stage, as opposed to
    /// bad input or configuration.
    pub fn is_estimation(&self) -> bool {
        match self {
            Error::Convergence { .. }
            | Error::EmptySample
            | Error::Rank
            | Error::DofExhausted { .. }
            | Error::InsufficientClusters(_) => true,
            Error::Spec { source, .. } => source.is_estimation(),
            _ => false,
        }
    }

    /// Process exit code used by the CLI: 3 for estimation failures, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.is_estimation() {
            3
        } else {
            2
        }
    }
}
