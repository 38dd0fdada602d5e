//! Scalar fields: the functions the operator acts on.
//!
//! A [`ScalarField`] bundles the pointwise evaluator with the metadata the
//! numerics need to be correct rather than hopeful: a support descriptor
//! (evaluation outside it is defined to be exactly 0 and enforced here, not
//! trusted), a smoothness predicate (PV integrals are only attempted where
//! the field is twice differentiable), and a [`DecayClass`] bound that the
//! quadrature engine turns into analytic tail-truncation radii.

use crate::error::Error;
use crate::geom::{Ball, FracOrder, Point, SpaceDim};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Polynomial decay bound: |u(y)| ≤ M · (1 + |y|)^e with e = `tail_exponent`,
/// M = `bound_constant`. The class is metadata the caller vouches for; the
/// engine spends it on truncation radii and admissibility checks.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayClass {
    pub tail_exponent: f64,
    pub bound_constant: f64,
}

impl DecayClass {
    pub fn new(tail_exponent: f64, bound_constant: f64) -> Result<Self> {
        if !tail_exponent.is_finite() || !(bound_constant.is_finite() && bound_constant > 0.0) {
            return Err(Error::invalid(
                "decay class needs a finite exponent and a positive finite bound constant",
            ));
        }
        Ok(DecayClass {
            tail_exponent,
            bound_constant,
        })
    }

    /// Membership in the operator's natural growth class requires
    /// ∫ |u| / (1 + |y|^{n+α}) dy < ∞, i.e. tail_exponent < α.
    pub fn admissible_for(&self, alpha: FracOrder) -> bool {
        self.tail_exponent < alpha.alpha()
    }
}

/// Where a field may be nonzero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Support {
    AllSpace,
    /// The open half-space { y : y_n > 0 }.
    UpperHalfSpace,
    ExteriorOfBall(Ball),
    /// Contained in the closed ball |y| ≤ radius around the origin.
    Compact { radius: f64 },
}

impl Support {
    /// Is `y` inside the closed support? (Boundary counts as inside; the
    /// evaluator decides its own boundary values there.)
    pub fn contains(&self, y: &Point) -> bool {
        match self {
            Support::AllSpace => true,
            Support::UpperHalfSpace => y.last() > 0.0,
            Support::ExteriorOfBall(ball) => y.dist(ball.center()) > ball.radius(),
            Support::Compact { radius } => y.norm() <= *radius,
        }
    }

    /// Deterministic sample points strictly outside the support, used by the
    /// constructor to verify the evaluator really vanishes there.
    fn outside_samples(&self, dim: SpaceDim) -> Vec<Point> {
        let n = dim.n();
        let mut out = Vec::new();
        match self {
            Support::AllSpace => {}
            Support::UpperHalfSpace => {
                for scale in [0.5, 3.0, 40.0] {
                    let mut c = vec![0.3 * scale; n];
                    c[n - 1] = -scale;
                    out.push(Point::new(&c).expect("finite coords"));
                }
            }
            Support::ExteriorOfBall(ball) => {
                out.push(*ball.center());
                let inner = ball
                    .center()
                    .add_scaled(0.5 * ball.radius(), &first_axis(dim));
                out.push(inner);
            }
            Support::Compact { radius } => {
                for scale in [1.5, 10.0] {
                    out.push(
                        Point::zero(dim).add_scaled(radius * scale + 1.0, &first_axis(dim)),
                    );
                }
            }
        }
        out
    }
}

fn first_axis(dim: SpaceDim) -> Point {
    Point::axis(dim, 0, 1.0).expect("dim >= 1")
}

type EvalFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type SmoothFn = Arc<dyn Fn(&Point) -> bool + Send + Sync>;

/// A real-valued function of an n-point plus the metadata the numerics rely
/// on. Cloning is cheap (shared evaluators).
#[derive(Clone)]
pub struct ScalarField {
    eval: EvalFn,
    smooth_at: SmoothFn,
    support: Support,
    decay: DecayClass,
    dim: SpaceDim,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("decay", &self.decay)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    /// Build a field, verifying by sampling that the evaluator vanishes
    /// outside the declared support.
    pub fn new(
        dim: SpaceDim,
        support: Support,
        decay: DecayClass,
        smooth_at: impl Fn(&Point) -> bool + Send + Sync + 'static,
        eval: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        for p in support.outside_samples(dim) {
            let v = eval(&p);
            if v != 0.0 {
                return Err(Error::invalid(format!(
                    "evaluator returns {v} at {:?}, outside the declared support {support:?}",
                    p.as_slice()
                )));
            }
        }
        Ok(ScalarField {
            eval: Arc::new(eval),
            smooth_at: Arc::new(smooth_at),
            support,
            decay,
            dim,
        })
    }

    /// Field value; exactly 0 outside the support by construction.
    #[inline]
    pub fn eval(&self, y: &Point) -> f64 {
        if self.support.contains(y) {
            (self.eval)(y)
        } else {
            0.0
        }
    }

    #[inline]
    pub fn smooth_at(&self, x: &Point) -> bool {
        (self.smooth_at)(x)
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn decay(&self) -> DecayClass {
        self.decay
    }

    pub fn dim(&self) -> SpaceDim {
        self.dim
    }

    /// The constant field y ↦ v.
    pub fn constant(dim: SpaceDim, v: f64) -> Result<Self> {
        let decay = DecayClass::new(0.0, v.abs().max(1.0))?;
        ScalarField::new(dim, Support::AllSpace, decay, |_| true, move |_| v)
    }

    /// The Gaussian e^{−|y|²}. The polynomial decay bound
    /// (1+|y|)^{−40} · 1e21 dominates it everywhere (the ratio peaks near
    /// |y| = √20), giving the engine a truncation radius of order 10.
    pub fn gaussian(dim: SpaceDim) -> Result<Self> {
        let decay = DecayClass::new(-40.0, 1.0e21)?;
        ScalarField::new(dim, Support::AllSpace, decay, |_| true, |y: &Point| {
            (-y.norm_sq()).exp()
        })
    }

    /// Compactly supported C³ bump (1 − |y|²)⁴ on the unit ball.
    pub fn bump(dim: SpaceDim) -> Result<Self> {
        let decay = DecayClass::new(-60.0, 1.0)?;
        ScalarField::new(
            dim,
            Support::Compact { radius: 1.0 },
            decay,
            |_| true,
            |y: &Point| {
                let s = 1.0 - y.norm_sq();
                if s > 0.0 {
                    s.powi(4)
                } else {
                    0.0
                }
            },
        )
    }

    /// The translate y ↦ u(y − a). Supported for translation-stable support
    /// descriptors (all-space and compact).
    pub fn translated(&self, a: &Point) -> Result<Self> {
        if a.dim() != self.dim {
            return Err(Error::invalid("translation vector dimension mismatch"));
        }
        let support = match &self.support {
            Support::AllSpace => Support::AllSpace,
            Support::Compact { radius } => Support::Compact {
                radius: radius + a.norm(),
            },
            other => {
                return Err(Error::invalid(format!(
                    "translation not supported for {other:?}"
                )))
            }
        };
        // (1+|y−a|) ≥ (1+|y|)/(1+|a|), so the bound constant picks up
        // (1+|a|)^{|e|}.
        let e = self.decay.tail_exponent;
        let decay = DecayClass::new(
            e,
            self.decay.bound_constant * (1.0 + a.norm()).powf(e.abs()),
        )?;
        let inner = self.clone();
        let a = *a;
        ScalarField::new(
            self.dim,
            support,
            decay,
            move |x: &Point| inner.smooth_at(&x.sub(&a)),
            {
                let inner = self.clone();
                move |y: &Point| inner.eval(&y.sub(&a))
            },
        )
    }

    /// The dilation y ↦ u(λ y), λ > 0.
    pub fn dilated(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid("dilation factor must be positive"));
        }
        let support = match &self.support {
            Support::AllSpace => Support::AllSpace,
            Support::Compact { radius } => Support::Compact {
                radius: radius / lambda,
            },
            other => {
                return Err(Error::invalid(format!(
                    "dilation not supported for {other:?}"
                )))
            }
        };
        let e = self.decay.tail_exponent;
        // |u(λy)| ≤ M (1+λ|y|)^e ≤ M·max(1,λ)^{|e|}·(1+|y|)^e.
        let decay = DecayClass::new(
            e,
            self.decay.bound_constant * lambda.max(1.0 / lambda).powf(e.abs()),
        )?;
        let inner = self.clone();
        let inner2 = self.clone();
        ScalarField::new(
            self.dim,
            support,
            decay,
            move |x: &Point| inner.smooth_at(&x.scale(lambda)),
            move |y: &Point| inner2.eval(&y.scale(lambda)),
        )
    }

    /// Pointwise linear combination a·u + b·v (supports must allow it: the
    /// result claims the union via all-space unless both are compact).
    pub fn linear_combination(a: f64, u: &ScalarField, b: f64, v: &ScalarField) -> Result<Self> {
        if u.dim != v.dim {
            return Err(Error::invalid("field dimension mismatch"));
        }
        let support = match (&u.support, &v.support) {
            (Support::Compact { radius: r1 }, Support::Compact { radius: r2 }) => {
                Support::Compact {
                    radius: r1.max(*r2),
                }
            }
            _ => Support::AllSpace,
        };
        let e = u.decay.tail_exponent.max(v.decay.tail_exponent);
        let m = a.abs() * u.decay.bound_constant + b.abs() * v.decay.bound_constant;
        let decay = DecayClass::new(e, m.max(f64::MIN_POSITIVE))?;
        let (u1, v1) = (u.clone(), v.clone());
        let (u2, v2) = (u.clone(), v.clone());
        ScalarField::new(
            u.dim,
            support,
            decay,
            move |x: &Point| u1.smooth_at(x) && v1.smooth_at(x),
            move |y: &Point| a * u2.eval(y) + b * v2.eval(y),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_enforced_on_eval() {
        let dim = SpaceDim::new(2).unwrap();
        // Declared compact but the closure forgets to vanish: constructor rejects.
        let bad = ScalarField::new(
            dim,
            Support::Compact { radius: 1.0 },
            DecayClass::new(-10.0, 1.0).unwrap(),
            |_| true,
            |_| 1.0,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn gaussian_decay_bound_holds() {
        // Spot-check the declared polynomial dominator at a few radii.
        for rho in [0.0_f64, 1.0, 3.0, 4.5, 8.0, 20.0] {
            let bound = 1.0e21 * (1.0 + rho).powf(-40.0);
            assert!((-rho * rho).exp() <= bound, "rho={rho}");
        }
    }
}
