use thiserror::Error;

use crate::estimator::EstimateRecord;
use crate::model::FitOutcome;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a mathematical domain constraint.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration failed validation before any work started.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called with data that does not meet its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The avoided-crossing fit has fewer independent constraints than parameters.
    #[error("under-determined fit: {0}")]
    UnderDetermined(String),

    /// The fit did not converge; carries the best parameters found so far.
    #[error("fit did not converge after {iterations} iterations (rms residual {rms_hz:.3} Hz)")]
    FitNotConverged {
        iterations: usize,
        rms_hz: f64,
        best: Box<FitOutcome>,
    },

    /// A ringdown had no samples above the noise floor.
    #[error("ringdown readout lost: {0}")]
    Readout(String),

    /// A Ramsey trace could not be assembled.
    #[error("trace error: {0}")]
    Trace(String),

    /// The spectrum has no usable local maximum away from zero frequency.
    #[error("no spectral peak found: {0}")]
    NoPeak(String),

    /// Fringe visibility is undefined for a flat trace.
    #[error("undefined visibility: {0}")]
    UndefinedVisibility(String),

    /// An IAS run stopped early; the records produced so far are retained.
    #[error("IAS run failed at iteration {iteration}: {source}")]
    IasRun {
        iteration: usize,
        partial: Vec<EstimateRecord>,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// The innermost cause, looking through [`Error::IasRun`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::IasRun { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_no_peak(&self) -> bool {
        matches!(self.root(), Error::NoPeak(_))
    }
}
