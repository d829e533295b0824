//! Error type shared by all modules.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library.
///
/// Error payloads are stored as `f64` regardless of the working scalar type;
/// they exist for diagnostics, not further arithmetic.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An evaluation point fell outside a site's support.
    #[error("x = {x} lies outside the site domain")]
    DomainViolation { x: f64 },

    /// A claimed regularity constant was contradicted by grid evidence.
    #[error(
        "claimed {name} = {claimed} is violated by the measured value {measured} at x = {witness}"
    )]
    CertificationFailed {
        name: &'static str,
        claimed: f64,
        measured: f64,
        witness: f64,
    },

    /// The log-density evaluated to NaN or infinity inside the integration window.
    #[error("log-density is non-finite at x = {x}")]
    NonFiniteLogDensity { x: f64 },

    /// Grid doubling stopped improving before reaching the requested tolerance.
    #[error("quadrature did not converge after {refinements} refinements (last relative change {last_delta:.3e})")]
    QuadratureAccuracy {
        refinements: usize,
        last_delta: f64,
    },

    /// An integration grid that is not a power of two, too coarse, or otherwise unusable.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A moment-matching step produced a non-positive hybrid variance.
    #[error("site {site} produced a non-positive hybrid variance")]
    NumericalFailure { site: usize },

    /// The EP iteration left the space of proper Gaussian approximations.
    #[error("EP diverged: {reason}")]
    Divergence { reason: String },

    /// An operation that needs a converged fixed point was handed a non-converged one.
    #[error("{op} requires a converged fixed point")]
    NotConverged { op: &'static str },

    /// Newton mode search ran out of iterations.
    #[error("mode search did not converge: |gradient| = {last_gradient:.3e} at x = {last_x} after {iters} iterations")]
    ModeSearchFailed {
        last_x: f64,
        last_gradient: f64,
        iters: usize,
    },

    /// A variance argument that must be positive was not.
    #[error("variance inputs must be positive")]
    NonPositiveVariance,

    /// Too few points survive the noise-floor cut to fit a rate.
    #[error("only {usable} usable points after the noise-floor drop; need at least 4")]
    InsufficientData { usable: usize },

    /// A certificate suite was asked to run without certified constants.
    #[error("{suite} requires certified regularity constants")]
    UncertifiedConstants { suite: &'static str },

    /// Malformed target description (JSON or programmatic).
    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),
}
