//! Crate error type. Variants distinguish invalid inputs (domain/config-level),
//! solver failures (bracketing, divergence, iteration caps), and internal
//! consistency violations, so callers can map them to distinct exit statuses.

use thiserror::Error;

/// Errors raised by the solver and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented domain (wrong sign, range, or order).
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Field/grid dimensions do not match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A field violates the Dirichlet boundary condition where one is required.
    #[error("boundary violation: {0}")]
    BoundaryViolation(String),

    /// Evaluating the nonlinearity would overflow the floating exponent range;
    /// the argument is outside desk scale.
    #[error("nonlinearity saturated: exp argument {exponent:.3e} exceeds the floating range at s = {s:.6e}")]
    Saturation { s: f64, exponent: f64 },

    /// The shooting sweep found no slope bracket: no sign change of the terminal
    /// value across the ladder. The sweep log pairs each slope with its outcome
    /// (positive: terminal value; negative: distance of the interior zero from
    /// the outer radius).
    #[error("no shooting bracket: terminal value kept one sign over {} slopes in [{:.3e}, {:.3e}]",
        sweep.len(),
        sweep.first().map(|p| p.0).unwrap_or(f64::NAN),
        sweep.last().map(|p| p.0).unwrap_or(f64::NAN))]
    NoBracket { sweep: Vec<(f64, f64)> },

    /// Newton refinement failed to reach the residual tolerance.
    #[error("Newton refinement diverged: residual {residual:.3e} after {iterations} iterations")]
    NewtonDiverged { residual: f64, iterations: usize },

    /// The iteration converged, but to a profile violating the positivity
    /// contract.
    #[error("inadmissible profile: {message}")]
    InadmissibleProfile { message: String },

    /// The fibering derivative kept one sign over the whole sweep; the ray has
    /// no interior maximum at this resolution.
    #[error("fibering map has no interior maximum: g' kept one sign up to t = {t_max:.3e}")]
    NoSignChange { t_max: f64 },

    /// Mountain-pass geometry failed to validate (no positive barrier, or no
    /// endpoint with nonpositive energy).
    #[error("mountain-pass geometry violated: {0}")]
    GeometryViolated(String),

    /// The mountain-pass iteration cap was reached; the best candidate so far
    /// is attached, flagged non-converged.
    #[error("iteration cap {iterations} reached: projected gradient norm {grad_norm:.3e} above tolerance")]
    IterationCap {
        iterations: usize,
        grad_norm: f64,
        best: Box<crate::conevar::MountainPassResult>,
    },

    /// Bracket expansion for the Luxemburg norm failed: the modulus saturated
    /// for every probed scale.
    #[error("Luxemburg bracket expansion failed: modulus saturated for all k ≥ {k_min:.3e}")]
    BracketExpansion { k_min: f64 },

    /// A nonzero field was required.
    #[error("zero field: {0}")]
    ZeroField(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}
