//! Principal-value core of the singular integral.
//!
//! The integrand (u(x) − u(y))/|y−x|^{n+α} is paired over antipodes y and
//! 2x − y, which cancels the gradient term analytically and leaves an
//! O(|y−x|^{2−n−α}) integrand. Pairing is evaluated literally as
//! g = 2u(x) − u(x+ρω) − u(x−ρω), so affine fields cancel to rounding.
//!
//! Below a cut radius the subtraction itself drowns in rounding: g carries
//! an absolute error of order ε·|u(x)| against a true size of order
//! ρ²·|D²u|, so no quadrature sampled from evaluations of u can see the
//! integrand there. Instead the paired spherical average S(ρ), which is an
//! even analytic function of ρ near 0, is sampled at four radii just above
//! the cut, interpolated in ρ², and the cut segment integrated in closed
//! form; a fifth sample validates the interpolant and the rounding bound
//! goes into the error estimate.

use super::adapt1d::{adaptive, Integrand1d, NodeOut};
use super::angular::{gauss_legendre, lower_sphere_nodes};
use super::exterior::{integrate_exterior, ExteriorIntegrand, SupportBreaks};
use super::{EvalResult, QuadratureSpec};
use crate::error::Error;
use crate::exec::{pairwise_sum, par_map};
use crate::field::{DecayClass, ScalarField, Support};
use crate::geom::{Ball, FracOrder, Point, MAX_DIM};
use crate::Result;

/// Largest radius around x on which the field is smooth enough for the
/// paired core: stay clear of support interfaces.
pub(crate) fn smooth_core_radius(u: &ScalarField, x: &Point, delta: f64) -> f64 {
    match u.support() {
        Support::UpperHalfSpace => delta.min(0.9 * x.last()),
        Support::ExteriorOfBall(b) => delta.min(0.9 * (x.dist(b.center()) - b.radius())),
        Support::Compact { radius } => {
            let gap = radius - x.norm();
            if gap > 0.0 {
                // interior of the support ball: the outer edge may still be
                // only finitely differentiable, keep the core inside it
                delta.min(0.9 * gap)
            } else {
                delta.min(0.9 * (-gap).max(f64::MIN_POSITIVE))
            }
        }
        Support::AllSpace => delta,
    }
}

/// Paired spherical average S(ρ) = ∮_{S^{n−1}} (u(x) − u(x+ρω)) dω, summed
/// over a half-sphere rule in the paired form.
struct PairedAverage<'a> {
    u: &'a ScalarField,
    x: Point,
    two_ux: f64,
    alpha: f64,
    polar0: usize,
    azim0: usize,
}

impl PairedAverage<'_> {
    fn half_sphere(&self, rho: f64, polar: usize, azim: usize) -> (f64, u64) {
        let dim = self.x.dim();
        let n = dim.n();
        let g = |omega: &Point| {
            let yp = self.x.add_scaled(rho, omega);
            let ym = self.x.add_scaled(-rho, omega);
            self.two_ux - self.u.eval(&yp) - self.u.eval(&ym)
        };
        match n {
            1 => {
                let e1 = Point::axis(dim, 0, 1.0).expect("dim 1");
                (g(&e1), 2)
            }
            2 => {
                // g is π-periodic and smooth on the core ball: midpoint
                // trapezoid is spectral.
                let w = std::f64::consts::PI / azim as f64;
                let vals = par_map(azim, |j| {
                    let phi = w * (j as f64 + 0.5);
                    let omega = Point::new(&[phi.sin(), phi.cos()]).expect("finite");
                    g(&omega)
                });
                (pairwise_sum(&vals) * w, 2 * azim as u64)
            }
            _ => {
                // Hemisphere θ ∈ [0, π/2], full lower sphere in azimuth.
                let gl = gauss_legendre(polar);
                let mut sub: Vec<([f64; MAX_DIM], f64)> = Vec::new();
                lower_sphere_nodes(n - 1, polar, azim, &mut sub);
                let mut nodes: Vec<(Point, f64)> = Vec::with_capacity(gl.len() * sub.len());
                let quarter = 0.25 * std::f64::consts::PI;
                for &(xg, wg) in gl.iter() {
                    let theta = quarter * (xg + 1.0);
                    let (st, ct) = (theta.sin(), theta.cos());
                    let jac = wg * quarter * st.powi(n as i32 - 2);
                    for (eta, ew) in &sub {
                        let mut local = [0.0_f64; MAX_DIM];
                        for i in 0..n - 1 {
                            local[i] = st * eta[i];
                        }
                        local[n - 1] = ct;
                        nodes.push((
                            Point::new(&local[..n]).expect("finite unit vector"),
                            jac * ew,
                        ));
                    }
                }
                let vals = par_map(nodes.len(), |i| g(&nodes[i].0));
                let ws: Vec<f64> = nodes.iter().map(|nw| nw.1).collect();
                (crate::exec::pairwise_dot(&ws, &vals), 2 * nodes.len() as u64)
            }
        }
    }

    /// S(ρ) with an escalation step: (value, error handle, u evaluations).
    fn sample(&self, rho: f64) -> (f64, f64, u64) {
        let (v0, c0) = self.half_sphere(rho, self.polar0, self.azim0);
        if self.x.dim().n() == 1 {
            return (v0, 0.0, c0);
        }
        let (v1, c1) = self.half_sphere(
            rho,
            self.polar0 + self.polar0 / 2,
            self.azim0 + self.azim0 / 2,
        );
        (v1, (v1 - v0).abs(), c0 + c1)
    }
}

impl Integrand1d for PairedAverage<'_> {
    fn eval(&self, rho: f64) -> NodeOut {
        let (s, ds, cost) = self.sample(rho);
        let k = rho.powf(-1.0 - self.alpha);
        NodeOut {
            value: k * s,
            aux_error: k * ds,
            cost,
        }
    }

    fn parallel_nodes(&self) -> bool {
        true
    }
}

/// ∫_{0<|y−x|<inner_radius} (u(x) − u(y))/|y−x|^{n+α} dy as a principal
/// value, via antipodal pairing.
pub fn integrate_pv_core(
    u: &ScalarField,
    x: &Point,
    alpha: FracOrder,
    inner_radius: f64,
    spec: &QuadratureSpec,
) -> Result<EvalResult> {
    spec.validate()?;
    if u.dim() != x.dim() {
        return Err(Error::invalid(format!(
            "field dimension {} does not match point dimension {}",
            u.dim().n(),
            x.dim().n()
        )));
    }
    if !(inner_radius.is_finite() && inner_radius > 0.0) {
        return Err(Error::invalid(format!(
            "inner radius must be positive and finite, got {inner_radius}"
        )));
    }
    if !u.smooth_at(x) {
        return Err(Error::domain(
            "principal-value core needs u twice differentiable at x (smoothness flag unset)",
        ));
    }
    let a = alpha.alpha();
    let delta = inner_radius;
    let r0 = smooth_core_radius(u, x, delta);
    let rho_cut = 1e-2_f64.min(0.25 * r0);

    let avg = PairedAverage {
        u,
        x: *x,
        two_ux: 2.0 * u.eval(x),
        alpha: a,
        polar0: 16,
        azim0: 24,
    };

    // --- cut segment [0, ρ_cut]: interpolate S(ρ)/ρ² in z = (ρ/ρ_cut)² ---
    let zs: [f64; 4] = [1.0, 0.5, 0.25, 0.125];
    let mut v = [0.0_f64; 4];
    let mut dv = [0.0_f64; 4];
    let mut n_evals: u64 = 0;
    let eps = f64::EPSILON;
    for (j, &z) in zs.iter().enumerate() {
        let rho = rho_cut * z.sqrt();
        let (s, ds, c) = avg.sample(rho);
        n_evals += c;
        v[j] = s / (rho * rho);
        // escalation delta plus the subtraction's rounding floor
        dv[j] = (ds + 4.0 * eps * (avg.two_ux.abs() + s.abs()) * c as f64) / (rho * rho);
    }
    // Lagrange basis L_j(z) expanded in monomials; then
    // ∫_0^{ρc} ρ^{1−α} z^k dρ = ρc^{2−α} / (2k + 2 − α).
    let rc_pow = rho_cut.powf(2.0 - a);
    let mut wq = [0.0_f64; 4];
    let mut basis_at = |zeval: f64| -> [f64; 4] {
        let mut out = [0.0; 4];
        for j in 0..4 {
            let mut c = vec![1.0_f64];
            for (i, &zi) in zs.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = zs[j] - zi;
                let mut nc = vec![0.0; c.len() + 1];
                for (k, &ck) in c.iter().enumerate() {
                    nc[k + 1] += ck / d;
                    nc[k] -= ck * zi / d;
                }
                c = nc;
            }
            wq[j] = rc_pow * c.iter().enumerate().map(|(k, ck)| ck / (2.0 * k as f64 + 2.0 - a)).sum::<f64>();
            out[j] = c
                .iter()
                .rev()
                .fold(0.0, |acc, &ck| acc * zeval + ck);
        }
        out
    };
    let z4 = 0.0625;
    let l4 = basis_at(z4);
    let tail_value: f64 = (0..4).map(|j| wq[j] * v[j]).sum();
    // validation sample at z4
    let rho4 = rho_cut * z4.sqrt();
    let (s4, ds4, c4) = avg.sample(rho4);
    n_evals += c4;
    let v4 = s4 / (rho4 * rho4);
    let p4: f64 = (0..4).map(|j| l4[j] * v[j]).sum();
    let resid = (v4 - p4).abs() + (ds4 + 4.0 * eps * (avg.two_ux.abs() + s4.abs()) * c4 as f64) / (rho4 * rho4);
    let mut tail_err = resid * rc_pow / (2.0 - a);
    for j in 0..4 {
        tail_err += wq[j].abs() * dv[j];
    }

    // --- sampled segment [ρ_cut, R₀] ---
    let mut seeds: Vec<(f64, f64)> = Vec::new();
    let mut lo = rho_cut;
    while lo * 2.0 < r0 {
        seeds.push((lo, lo * 2.0));
        lo *= 2.0;
    }
    seeds.push((lo, r0));
    let main = adaptive(&avg, &seeds, spec.rel_tol, 0.4 * spec.abs_tol, spec.max_evals);
    n_evals += main.n_evals;

    // --- interface annulus [R₀, δ], present only for fields whose support
    //     boundary cuts the inner ball ---
    let mut value = tail_value + main.value;
    let mut error = tail_err + main.error;
    let mut annulus_converged = true;
    if r0 < delta {
        let breaks = SupportBreaks::for_support(u.support(), x);
        let ux = 0.5 * avg.two_ux;
        let nf = x.dim().nf();
        let eval = |y: &Point, rho: f64, _t: f64| {
            if rho >= delta {
                return 0.0;
            }
            (ux - u.eval(y)) * rho.powf(-nf - a)
        };
        // Bound valid on the annulus and zero beyond δ: only feeds the
        // truncation solver, which the δ cutoff then makes cheap.
        let sup_u = u.decay().bound_constant * (1.0 + x.norm() + delta).powf(u.decay().tail_exponent.abs());
        let m_ann = (ux.abs() + sup_u) * r0.powf(-nf - a) * (1.0 + x.norm() + delta).powf(nf + 8.0);
        let decay = DecayClass::new(-nf - 8.0, m_ann.max(1.0))?;
        let polar = |rho: f64| breaks.polar_at(rho);
        let mut radial = breaks.radial.clone();
        radial.push(delta);
        let f = ExteriorIntegrand {
            eval: &eval,
            edge_exponent: 0.0,
            decay,
            axis: breaks.axis,
            polar_breaks_at: Some(&polar),
            radial_breaks: radial,
        };
        let ball = Ball::new(*x, r0)?;
        let mut ann_spec = spec.clone();
        ann_spec.abs_tol = 0.4 * spec.abs_tol;
        match integrate_exterior(&f, &ball, &ann_spec) {
            Ok(res) => {
                value += res.value;
                error += res.error_estimate;
                n_evals += res.n_evals;
            }
            Err(Error::ConvergenceFailure { partial, .. }) => {
                value += partial.value;
                error += partial.error_estimate;
                n_evals += partial.n_evals;
                annulus_converged = false;
            }
            Err(e) => return Err(e),
        }
    }

    let result = EvalResult {
        value,
        error_estimate: error,
        n_evals,
    };
    // The cut-segment rounding bound is irreducible by more evaluations; it
    // is reported, not failed on. Failure means a sampled part ran out of
    // budget before its share of the tolerance.
    if main.converged && annulus_converged {
        Ok(result)
    } else {
        Err(Error::ConvergenceFailure {
            partial: result,
            context: format!(
                "pv core: budget {} exhausted before tolerance (rel {}, abs {})",
                spec.max_evals, spec.rel_tol, spec.abs_tol
            ),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::SpaceDim;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn dim(n: usize) -> SpaceDim {
        SpaceDim::new(n).unwrap()
    }

    #[test]
    fn constant_field_is_exact_zero() {
        let u = ScalarField::constant(dim(2), 3.5).unwrap();
        let x = Point::new(&[0.3, -0.4]).unwrap();
        let out =
            integrate_pv_core(&u, &x, FracOrder::new(1.0).unwrap(), 1.0, &spec()).unwrap();
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn affine_field_cancels_to_rounding() {
        let u = ScalarField::new(
            dim(2),
            Support::AllSpace,
            DecayClass::new(1.0, 50.0).unwrap(),
            |_: &Point| true,
            |y: &Point| 2.0 * y.coord(0) - 0.7 * y.coord(1) + 0.3,
        )
        .unwrap();
        let x = Point::new(&[0.1, 0.2]).unwrap();
        let out =
            integrate_pv_core(&u, &x, FracOrder::new(1.3).unwrap(), 1.0, &spec()).unwrap();
        assert!(out.value.abs() < 1e-10, "value {}", out.value);
    }

    #[test]
    fn quadratic_closed_form_n1() {
        // u(y) = |y−x|², n = 1, α = 1: ∫_{−1}^{1} (−t²)/|t|² dt = −2.
        let x = Point::new(&[0.5]).unwrap();
        let u = ScalarField::new(
            dim(1),
            Support::AllSpace,
            DecayClass::new(2.0, 4.0).unwrap(),
            |_: &Point| true,
            move |y: &Point| {
                let t = y.coord(0) - 0.5;
                t * t
            },
        )
        .unwrap();
        let out =
            integrate_pv_core(&u, &x, FracOrder::new(1.0).unwrap(), 1.0, &spec()).unwrap();
        assert!(
            (out.value + 2.0).abs() < 1e-9,
            "value {} err {}",
            out.value,
            out.error_estimate
        );
    }

    #[test]
    fn smoothness_flag_is_enforced() {
        let d = dim(1);
        let u = ScalarField::new(
            d,
            Support::AllSpace,
            DecayClass::new(1.0, 2.0).unwrap(),
            |p: &Point| p.coord(0) != 0.0,
            |y: &Point| y.coord(0).abs(),
        )
        .unwrap();
        let x = Point::zero(d);
        assert!(matches!(
            integrate_pv_core(&u, &x, FracOrder::new(1.0).unwrap(), 1.0, &spec()),
            Err(Error::Domain(_))
        ));
    }
}
