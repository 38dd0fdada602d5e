//! Deterministic adaptive quadrature for the singular geometries of the
//! nonlocal operator.
//!
//! Three public entry points cover everything the crate integrates:
//!
//! * [`integrate_exterior`]: exterior-of-ball integrals with an edge factor
//!   (|y−c|² − r²)^{−β}, radial-shell decomposition around a chosen center;
//! * [`integrate_exterior_rays`]: the same domain parametrized by rays from
//!   an interior evaluation point, for integrands peaked where that point
//!   approaches the sphere (Poisson-kernel factors);
//! * [`integrate_pv_core`]: the punctured-ball principal-value core with
//!   antipodal pairing.
//!
//! All of them share the 15-point Gauss–Kronrod panel engine
//! ([`adapt1d`]) with worst-first bisection in a deterministic order and
//! fixed-order pairwise summation, so results are bit-reproducible across
//! runs and thread counts.

pub mod adapt1d;
pub mod angular;
pub mod exterior;
pub mod pv;
pub mod slope;

pub use crate::field::DecayClass;
pub use exterior::{
    integrate_exterior, integrate_exterior_rays, ExteriorIntegrand, RayIntegrand, SupportBreaks,
};
pub use pv::integrate_pv_core;
pub(crate) use pv::smooth_core_radius;
pub use slope::{fit_slope, SlopeFit};

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Tolerances, truncation policy, and budget for one integration call.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Relative tolerance target (> 0).
    pub rel_tol: f64,
    /// Absolute tolerance target (> 0).
    pub abs_tol: f64,
    /// Budget in integrand evaluations, ≥ 1000.
    pub max_evals: u64,
    /// Multiplier ≥ 1 applied to analytically derived tail-truncation radii.
    pub tail_safety: f64,
}

impl QuadratureSpec {
    pub fn new(rel_tol: f64, abs_tol: f64, max_evals: u64, tail_safety: f64) -> Result<Self> {
        if !(rel_tol.is_finite() && rel_tol > 0.0) || !(abs_tol.is_finite() && abs_tol > 0.0) {
            return Err(Error::invalid(
                "quadrature tolerances must be positive and finite",
            ));
        }
        if max_evals < 1000 {
            return Err(Error::invalid(format!(
                "max_evals must be at least 1000, got {max_evals}"
            )));
        }
        if !(tail_safety.is_finite() && tail_safety >= 1.0) {
            return Err(Error::invalid("tail_safety must be >= 1"));
        }
        Ok(QuadratureSpec {
            rel_tol,
            abs_tol,
            max_evals,
            tail_safety,
        })
    }

    /// The same spec with both tolerances tightened by `factor` (> 1).
    pub fn tightened(&self, factor: f64) -> Result<Self> {
        QuadratureSpec::new(
            self.rel_tol / factor,
            self.abs_tol / factor,
            self.max_evals,
            self.tail_safety,
        )
    }

    /// Re-validate a deserialized spec (serde does not run `new`).
    pub fn validate(&self) -> Result<()> {
        QuadratureSpec::new(self.rel_tol, self.abs_tol, self.max_evals, self.tail_safety)
            .map(|_| ())
    }
}

impl Default for QuadratureSpec {
    /// Comfortable defaults for the verification suites: tight enough for
    /// every acceptance tolerance, loose enough to stay fast.
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_evals: 20_000_000,
            tail_safety: 4.0,
        }
    }
}

/// Value, reported error bound, and cost of one numerical evaluation.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: f64,
    /// Upper bound reported by the scheme (panel error estimates plus
    /// angular refinement deltas plus the analytic tail remainder).
    pub error_estimate: f64,
    pub n_evals: u64,
}

impl EvalResult {
    pub fn exact(value: f64) -> Self {
        EvalResult {
            value,
            error_estimate: 0.0,
            n_evals: 0,
        }
    }
}
