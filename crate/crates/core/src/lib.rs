//! Numerical evaluation and verification of α-harmonic functions.
//!
//! The crate provides, for the fractional Laplacian of order α ∈ (0, 2):
//!
//! * closed-form kernels: the normalization constant, the Poisson kernel of a
//!   ball (exterior data, nonlocal), the exterior mean-value kernel, and the
//!   Riesz kernel ([`kernels`]);
//! * deterministic adaptive quadrature for the three singular geometries the
//!   operator lives on: exterior-of-ball integrals with an edge singularity
//!   `(|y-c|^2 - r^2)^{-α/2}`, principal-value cores `|y-x|^{-n-α}`, and
//!   heavy algebraic tails ([`quadrature`]);
//! * two independent evaluators of the operator, a PV singular integral and a
//!   mean-value limit, plus convergence studies connecting them ([`fraclap`]);
//! * the half-space machinery: the solution family `C x_n^{α/2}`, the Poisson
//!   extension, derivative decompositions, and the Riesz-kernel reproduction
//!   identity ([`halfspace`]);
//! * a Monte Carlo cross-oracle sampling the exit law of the isotropic
//!   α-stable process from a ball ([`mc_oracle`]);
//! * report types with fitted log-log convergence slopes ([`report`]) and the
//!   aggregated verification suite backing the CLI ([`suite`]).
//!
//! Everything is deterministic: identical inputs produce bit-identical
//! results regardless of thread count (enable or disable the `parallel`
//! feature; reductions are fixed-order either way).

pub mod error;
pub mod exec;
pub mod field;
pub mod fraclap;
pub mod geom;
pub mod halfspace;
pub mod kernels;
pub mod mc_oracle;
pub mod quadrature;
pub mod report;
pub mod special;
pub mod suite;

pub use error::Error;
pub use field::{DecayClass, ScalarField, Support};
pub use geom::{Ball, FracOrder, Point, SpaceDim};
pub use quadrature::{EvalResult, QuadratureSpec};

/// Library version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
