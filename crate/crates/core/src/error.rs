use thiserror::Error;

/// Failures surfaced by the library. Variant names mirror the failure
/// codes printed by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation {trunc} is below the minimum {min} for this operation")]
    TruncationTooSmall { trunc: usize, min: usize },

    #[error("TRUNC_TOO_SMALL: truncation {trunc} leaves a tail of {tail:e} (need < {limit:e})")]
    TruncTooSmall { trunc: usize, tail: f64, limit: f64 },

    #[error("NOT_EIGENVECTOR: residual {residual:e} exceeds {tol:e}")]
    NotEigenvector { residual: f64, tol: f64 },

    #[error("POLE_COLLISION: points {i} and {j} coincide")]
    PoleCollision { i: usize, j: usize },

    #[error("DRIFT_EXCEEDED: {quantity} drifted by {drift:e} (limit {tol:e}) at t = {t}")]
    DriftExceeded {
        quantity: &'static str,
        drift: f64,
        tol: f64,
        t: f64,
    },

    #[error("NONFINITE: state became non-finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("DEGENERATE: {0}")]
    Degenerate(String),

    #[error("NO_ESCAPE: |y| stayed below {threshold:e} in both time directions")]
    NoEscape {
        threshold: f64,
        report: Box<crate::v3::InstabilityReport>,
    },

    #[error("POLE_OUTSIDE: |P| = {modulus} is not inside the unit disc")]
    PoleOutside { modulus: f64 },

    #[error("MEASURE_MISMATCH: arcs cover {actual} but theta is {expected}")]
    MeasureMismatch { expected: f64, actual: f64 },

    #[error("malformed state: {0}")]
    MalformedState(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
