//! Error type shared by every module.

use thiserror::Error;

/// Failures raised by geometry, solvers, eigensolvers and the batch front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("tube half-width {halfwidth} does not fit: limit is {limit}")]
    TubeTooWide { halfwidth: f64, limit: f64 },

    #[error("normal derivative of the coefficient is not positive on the interface (min b = {min_b})")]
    NonPositiveWeight { min_b: f64 },

    #[error("bordered system residual {residual:e} exceeds tolerance")]
    IllConditioned { residual: f64 },

    #[error("solvability defect {defect:e} at interface node {node}")]
    SolvabilityViolation { defect: f64, node: usize },

    #[error("extrapolated coefficient drifted by {drift:e} between ladder refinements")]
    ExtrapolationUnstable { drift: f64 },

    #[error("Jacobian is numerically singular (min |eigenvalue| {min_eig:e}, threshold {threshold:e})")]
    SingularJacobian { min_eig: f64, threshold: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("fixed-point map is not contractive (ratio {ratio:.3})")]
    NotContractive { ratio: f64 },

    #[error("eigensolver stalled: {converged} of {wanted} eigenpairs converged")]
    EigensolverStall { converged: usize, wanted: usize },

    #[error("found {computed} eigenvalues in the window, predicted {predicted}")]
    CountMismatch { computed: usize, predicted: usize },

    #[error("mode tracking lost (best overlap {overlap:.3})")]
    TrackingLost { overlap: f64 },

    #[error("eigenvalue window too narrow: {0}")]
    WindowTooNarrow(String),

    #[error("run `{0}` not found")]
    MissingRun(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the user's input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidInput(_)
                | Error::TubeTooWide { .. }
                | Error::NonPositiveWeight { .. }
                | Error::MissingRun(_)
        )
    }
}
