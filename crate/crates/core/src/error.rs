use thiserror::Error;

/// Errors raised by model construction, simulation and estimation.
#[derive(Debug, Error)]
pub enum QcvvError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: {what} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unknown gate label `{label}` in circuit `{circuit_id}`")]
    UnknownLabel { label: String, circuit_id: String },

    #[error("rank-deficient {what}: rank {rank}, need {required}")]
    RankDeficient {
        what: &'static str,
        rank: usize,
        required: usize,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no convergence after {iterations} iterations (best log-likelihood {best_loglik})")]
    NonConvergence {
        iterations: usize,
        best_loglik: f64,
        /// Best iterate found, column-stacked.
        best: Vec<num_complex::Complex64>,
    },

    #[error("circuit {index}: {source}")]
    InCircuit {
        index: usize,
        #[source]
        source: Box<QcvvError>,
    },
}

impl QcvvError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        QcvvError::Validation(msg.into())
    }

    /// True for errors caused by numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            QcvvError::NonConvergence { .. } => true,
            QcvvError::InCircuit { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, QcvvError>;
