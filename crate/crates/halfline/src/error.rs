use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("singular evaluation at k = {0}")]
    SingularEvaluation(Complex64),
    #[error("contour continuation collapsed; last good point k = {last_good}")]
    ContinuationFailure { last_good: Complex64 },
    #[error("ODE step size underflow at x = {x}")]
    StepFailure { x: f64 },
    #[error("accuracy check failed: {what} residual {residual:e} exceeds {tol:e}")]
    Accuracy { what: String, residual: f64, tol: f64 },
    #[error("unresolved spectrum: winding {winding} vs {found} zeros found")]
    UnresolvedSpectrum { winding: i64, found: usize },
    #[error("reflectionless degeneracy at k = {0}: supply norming constants explicitly")]
    ReflectionlessDegeneracy(Complex64),
    #[error("inadmissible spectral family: {0}")]
    Inadmissible(String),
    #[error("index obstruction: log winding {0} on {1}")]
    IndexObstruction(i64, String),
    #[error("pole {0} within tolerance of the contour")]
    PoleOnContour(Complex64),
    #[error("ill-conditioned system (estimate {0:e}); increase resolution")]
    Conditioning(f64),
    #[error("solver did not converge: jump defect {0:e}")]
    NonConvergence(f64),
    #[error("jumps need {needed} collocation nodes (limit {limit}); deform the contour")]
    NodeLimit { needed: usize, limit: usize },
    #[error("second moment unavailable")]
    MomentOrder,
    #[error("lens rejected: {0}")]
    LensRejected(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("degree {degree} reaches only {achieved:e} (target {target:e})")]
    DegreeLimit { degree: usize, achieved: f64, target: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure is a rejected input rather than a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_) | Error::Inadmissible(_) | Error::IndexObstruction(..) | Error::ReflectionlessDegeneracy(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
