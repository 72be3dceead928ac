//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures raised while building or verifying fibres.
///
/// Variants are grouped loosely by the layer that raises them; callers that
/// only care about "configuration vs numerics" can use [`Error::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("potential is not positive definite at x = {x:?}")]
    NonPositiveDefinite { x: Vec<f64> },

    #[error("restriction of potential `{potential}` to x[{index}] -> -inf diverges")]
    LimitUndefined { potential: String, index: usize },

    #[error("moment coordinates {mu:?} lie outside the image of the moment map")]
    OutsideMomentImage { mu: Vec<f64> },

    #[error("point is off the hypersurface (relative defect {defect:.3e})")]
    OffHypersurface { defect: f64 },

    #[error("graph coordinate fixed point is not a contraction (factor {factor:.3e})")]
    NoContraction { factor: f64 },

    #[error("tangent frame is degenerate")]
    DegenerateFrame,

    #[error("point is too close to the singular set (gradient norm {norm:.3e})")]
    SingularPoint { norm: f64 },

    #[error("trajectory entered the excluded ball around Sing(X0) at u = {u:.6e}")]
    SingularApproach { u: f64 },

    #[error("integrator step size underflow at u = {u:.6e}")]
    StepUnderflow { u: f64 },

    #[error("spectral derivative is aliased ({fraction:.3e} of energy in top third of modes)")]
    AliasedFrame { fraction: f64 },

    #[error("phase unwrapping failed: adjacent jump {jump:.3e}")]
    PhaseWrapFailure { jump: f64 },

    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:.3e})")]
    Diverged { iterations: usize, residual: f64 },

    #[error("Newton iterate left the uniqueness ball (distance {distance:.3e} > r0 = {r0:.3e})")]
    OutOfBall { distance: f64, r0: f64 },

    #[error("continuation stalled at u = {frontier:.6e} (target {target:.6e})")]
    StallAtU { frontier: f64, target: f64 },

    #[error("fibres do not match on the overlap (distance {distance:.3e})")]
    NoMatch { distance: f64 },

    #[error("continuation of the fibre marking broke at loop step {step}: {reason}")]
    ContinuationBreak { step: usize, reason: String },

    #[error("monodromy entry deviates from an integer by {deviation:.3e}")]
    NonInteger { deviation: f64 },

    #[error("fibration does not close over the base circle: {0}")]
    OpenPath(String),

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::Config { .. } | Error::Io(_) | Error::Invariant(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
