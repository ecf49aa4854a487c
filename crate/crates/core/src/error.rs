use thiserror::Error;

/// Errors raised by the model, simulator, fitting and trace code.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The simulator could not reach its detection target within the contact cap.
    #[error("simulation starved after {generated} contacts: {detected} of {target} detections")]
    Starved {
        generated: u64,
        detected: usize,
        target: usize,
    },

    /// An infinite sum could not be truncated within its term cap.
    #[error("series truncation failed after {terms} terms: partial sum {partial}, remaining-mass bound {bound:e}")]
    Truncation {
        terms: usize,
        partial: f64,
        bound: f64,
    },

    /// Adaptive quadrature hit its panel cap before meeting tolerance.
    #[error("quadrature did not converge on [{lo}, {hi}]: estimate {estimate}, error {error:e}")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
    },

    /// An analytic expression produced a value outside its admissible range.
    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    /// A fitting routine could not produce an acceptable estimate.
    #[error("fit failed: {0}")]
    Fit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Well-formed input whose content violates an invariant.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
