use thiserror::Error;

/// Failure modes shared by every layer of the calculus.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the domain of a scalar function (zero argument, negative axis, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The kernel denominator vanishes because `x` lies on the sphere of `s`.
    #[error("singular kernel: |x^2 - 2Re(s)x + |s|^2| = {denominator:e} below tolerance")]
    SingularKernel { denominator: f64 },

    /// Matrix not invertible to working precision.
    #[error("matrix not invertible (condition estimate {condition:e})")]
    NotInvertible { condition: f64 },

    /// The point is on or too close to the S-spectrum.
    #[error(
        "point lies on the S-spectrum (sphere distance {distance:e}, tolerance {tolerance:e})"
    )]
    SpectralSingularity { distance: f64, tolerance: f64 },

    /// Eigenvalue iteration did not converge or returned inconsistent pairs.
    #[error("eigen-solver failure: {0}")]
    EigenSolver(String),

    /// A hypothesis of the requested formula is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Integration path is not admissible for the integrand.
    #[error("invalid path: {0}")]
    InvalidPath(String),

    /// Adaptive quadrature exhausted its budget.
    #[error("quadrature did not converge: error estimate {error_estimate:e} after {evaluations} evaluations")]
    Convergence {
        error_estimate: f64,
        evaluations: usize,
    },

    /// A post-condition check failed beyond tolerance.
    #[error("inconsistent result: {check} residual {residual:e} exceeds {tolerance:e}")]
    Inconsistency {
        check: String,
        residual: f64,
        tolerance: f64,
    },

    /// Dimension mismatch between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;
