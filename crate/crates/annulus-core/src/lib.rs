//! Variational solver and verification kit for the Dirichlet problem
//! −Δu + λu = f(x,u) on an N-dimensional annulus A = {R₀ < |x| < R₁} ⊂ ℝᴺ.
//!
//! Axially symmetric fields u(x) = 𝔲(r,θ), with r = |x| and θ = arcsin(|x_N|/r),
//! reduce the problem to the weighted 2D rectangle Q = (R₀,R₁) × (0,π/2) with
//! measure 2ω_{N−2}(cos θ)^{N−2} r^{N−1} dθ dr. The crate provides:
//!
//! - [`geometry`]: annulus description, tensor quadrature grids on Q, weighted
//!   integration of nodal fields;
//! - [`nonlinearity`]: the two shipped nonlinearity families (exponential-type
//!   and double-power), their primitives and derivatives, and machine checks of
//!   the structural growth inequalities they satisfy;
//! - [`orlicz`]: exponential modulus integrals, the Luxemburg norm, and a
//!   random-sample probe of the exponential-integrability bound on the cone;
//! - [`radial`]: positive radial solutions of the reduced two-point boundary
//!   value problem (shooting + Newton refinement) and their integral identities;
//! - [`stability`]: Hardy constant, the explicit angular mode y(θ) = 1 − N sin²θ,
//!   the 1D radial stability indicator, and an independent 2D second-variation
//!   cross-check;
//! - [`conevar`]: the cone-constrained variational engine — discrete energy and
//!   gradient, metric projection onto {u ≥ 0, 𝔲_θ ≤ 0}, fibering-map
//!   maximization, the perturbed-path comparison test, and a projected-gradient
//!   mountain-pass solver.
//!
//! All computations are deterministic: random sampling is seeded, reductions use
//! fixed summation order, and solvers are single-threaded per call.

pub mod conevar;
pub mod error;
pub mod geometry;
pub mod nonlinearity;
pub mod orlicz;
pub mod radial;
pub mod stability;
pub(crate) mod util;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
