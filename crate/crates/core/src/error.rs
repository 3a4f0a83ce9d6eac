//! Library-wide error type.

/// Errors surfaced by the numerical routines.
///
/// `Domain` covers argument validation (nonpositive values, mismatched
/// bounds, malformed grids). The remaining variants report genuine numeric
/// breakdowns and carry enough context to diagnose them.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid argument or out-of-domain input.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature hit its depth cap before meeting the tolerance.
    /// `partial` is the best available estimate, `error` its error estimate.
    #[error("quadrature did not converge (partial {partial:e}, error {error:e})")]
    QuadratureNonConvergence { partial: f64, error: f64 },

    /// ODE stepper could not proceed (step size underflow or non-finite state).
    #[error("ODE integration failed at x = {x}: {reason}")]
    OdeFailure { x: f64, reason: String },

    /// Root bracketing or refinement failed.
    #[error("root finding failed: {0}")]
    RootFinding(String),

    /// A feasibility search exhausted its range without a feasible point.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Serialization or file I/O problem.
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
