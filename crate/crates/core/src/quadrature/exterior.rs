//! Exterior-of-ball integration.
//!
//! Two parametrizations of { y : |y−c| > r } cover all integrands in scope.
//!
//! **Radial shells** ([`integrate_exterior`]): the radius ρ = |y−c| is the
//! adaptive variable, an angular product rule handles each shell. The edge
//! layer uses the exact variable t = ρ² − r² (passed to the integrand, which
//! avoids recomputing it as a catastrophic difference) and the power map
//! τ = t^{1−β} that removes a t^{−β} edge factor identically. The far field
//! is truncated at a radius solved analytically from the decay class; very
//! shallow tails (the Poisson integrand of the growing half-space solution
//! decays like ρ^{−n−α/2}, putting truncation radii at 10^50 and beyond)
//! are integrated in the log variable.
//!
//! **Rays from an interior point** ([`integrate_exterior_rays`]): for
//! integrands carrying the |x−y|^{-n} Poisson factor, whose mass
//! concentrates where the sphere passes closest to x. Each direction ω
//! integrates from the exact sphere crossing s₀(ω), with the edge factor
//! computed cancellation-free via t = ξ(ξ + 2q), ξ = s − s₀; the outer polar
//! integral grades its panels into the peak of angular width ≈ √((r−a)/r).

use super::adapt1d::{adaptive, Adapt1dOut, Integrand1d, NodeOut};
use super::angular::{integrate_sphere, lower_sphere_nodes, AngularSpec, Frame};
use super::{EvalResult, QuadratureSpec};
use crate::error::Error;
use crate::field::DecayClass;
use crate::geom::{Ball, Point, SpaceDim, MAX_DIM};
use crate::special::sphere_area;
use crate::Result;

/// Integrand over the exterior of a ball, shell-parametrized.
///
/// `eval` receives the point y, the shell radius ρ = |y−c|, and the exact
/// edge variable t = ρ² − r² (always computed cancellation-free by the
/// engine; integrands must use it instead of re-deriving it from y).
pub struct ExteriorIntegrand<'a> {
    pub eval: &'a (dyn Fn(&Point, f64, f64) -> f64 + Sync),
    /// β ∈ [0, 1): the integrand behaves like t^{−β} at the edge.
    pub edge_exponent: f64,
    /// Bound on the full integrand: |eval| ≤ M (1+|y|)^e, e < −n.
    pub decay: DecayClass,
    /// Polar axis for the angular rule (interface circles must be centered
    /// on it); `None` = e_n.
    pub axis: Option<Point>,
    /// Interface angles (polar, in (0,π)) on the shell of radius ρ.
    pub polar_breaks_at: Option<&'a (dyn Fn(f64) -> Vec<f64> + Sync)>,
    /// Exact radial breakpoints (support interfaces, excision shells).
    pub radial_breaks: Vec<f64>,
}

impl<'a> ExteriorIntegrand<'a> {
    pub fn new(
        eval: &'a (dyn Fn(&Point, f64, f64) -> f64 + Sync),
        edge_exponent: f64,
        decay: DecayClass,
    ) -> Self {
        ExteriorIntegrand {
            eval,
            edge_exponent,
            decay,
            axis: None,
            polar_breaks_at: None,
            radial_breaks: Vec::new(),
        }
    }
}

/// Integrand over the exterior of a ball, ray-parametrized from an interior
/// point x. `eval` receives y, s = |y−x|, and the exact t = |y−c|² − r².
pub struct RayIntegrand<'a> {
    pub eval: &'a (dyn Fn(&Point, f64, f64) -> f64 + Sync),
    /// β ∈ [0, 1): edge behavior t^{−β} as s → s₀(ω)⁺.
    pub edge_exponent: f64,
    /// |eval| ≤ M (1+|y|)^e, e < −n.
    pub decay: DecayClass,
    /// Split rays exactly where they cross the hyperplane y_n = 0
    /// (half-space data has a kink there).
    pub halfspace_breaks: bool,
    /// Split rays where they cross the sphere |y| = R around the origin
    /// (for integrands cut off at a fixed distance from the origin).
    /// Requires |x| < R.
    pub origin_sphere_break: Option<f64>,
}

impl<'a> RayIntegrand<'a> {
    pub fn new(
        eval: &'a (dyn Fn(&Point, f64, f64) -> f64 + Sync),
        edge_exponent: f64,
        decay: DecayClass,
    ) -> Self {
        RayIntegrand {
            eval,
            edge_exponent,
            decay,
            halfspace_breaks: false,
            origin_sphere_break: None,
        }
    }
}

fn check_edge_exponent(beta: f64) -> Result<()> {
    if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
        return Err(Error::invalid(format!(
            "edge exponent must lie in [0, 1), got {beta}"
        )));
    }
    Ok(())
}

/// Admissibility + analytic truncation radius.
///
/// Given |integrand| ≤ M_eff · ρ^{n−1+e} pointwise for large ρ, choose T with
/// remainder s_{n−1} M_eff T^{n+e}/|n+e| ≤ target, then stretch by
/// tail_safety. Returns (T, remainder bound at T).
fn truncation_radius(
    dim: SpaceDim,
    tail_exponent: f64,
    m_eff: f64,
    target: f64,
    tail_safety: f64,
    floor: f64,
) -> Result<(f64, f64)> {
    let n = dim.nf();
    let p = n + tail_exponent;
    if p >= 0.0 {
        return Err(Error::invalid(format!(
            "decay class inadmissible for an exterior integral: tail exponent {tail_exponent} \
             must be < -n = {}",
            -n
        )));
    }
    let s = sphere_area(dim);
    // T = (target · |p| / (s·M))^{1/p}; p < 0 so small targets give large T.
    let t_solved = (target * (-p) / (s * m_eff)).powf(1.0 / p);
    let t_final = (t_solved * tail_safety).max(floor);
    let rem = s * m_eff * t_final.powf(p) / (-p);
    Ok((t_final, rem))
}

/// Piecewise coordinate map shared by both engines: an edge zone in
/// τ = (edge variable)^{1−β}, a direct mid zone, a log-variable far zone.
#[derive(Clone, Debug)]
struct ZoneMap {
    /// abstract [0, tau_end] ↦ τ (edge zone); empty if tau_end = 0
    tau_end: f64,
    inv_one_minus_beta: f64,
    /// edge variable at the edge-zone end (t or ξ)
    edge_var_end: f64,
    /// abstract [tau_end, tau_end + mid_len] ↦ edge variable, affine
    mid_len: f64,
    /// abstract tail start in the log zone: v = ln(edge var)
    log_v0: f64,
    log_len: f64,
}

#[derive(Copy, Clone, Debug)]
enum Decoded {
    /// (edge variable value, d(edge var)/d(abstract))
    Edge(f64, f64),
    Mid(f64),
    Log(f64, f64),
}

impl ZoneMap {
    /// Build the map for an edge variable ranging over (0, top], with the
    /// edge zone covering (0, edge_end].
    fn new(beta: f64, edge_end: f64, log_start: f64, top: f64) -> ZoneMap {
        let edge_var_end = edge_end.min(top);
        let one_minus_beta = 1.0 - beta;
        let tau_end = edge_var_end.powf(one_minus_beta);
        let mid_hi = top.min(log_start.max(edge_var_end));
        let mid_len = (mid_hi - edge_var_end).max(0.0);
        let (log_v0, log_len) = if top > mid_hi * (1.0 + 1e-12) {
            (mid_hi.ln(), top.ln() - mid_hi.ln())
        } else {
            (0.0, 0.0)
        };
        ZoneMap {
            tau_end,
            inv_one_minus_beta: 1.0 / one_minus_beta,
            edge_var_end,
            mid_len,
            log_v0,
            log_len,
        }
    }

    fn total_len(&self) -> f64 {
        self.tau_end + self.mid_len + self.log_len
    }

    #[inline]
    fn decode(&self, x: f64) -> Decoded {
        if x <= self.tau_end {
            let tau = x.max(f64::MIN_POSITIVE);
            let v = tau.powf(self.inv_one_minus_beta);
            // dv/dτ = (1/(1−β)) τ^{β/(1−β)} = (1/(1−β)) v/τ.
            Decoded::Edge(v, self.inv_one_minus_beta * v / tau)
        } else if x <= self.tau_end + self.mid_len {
            Decoded::Mid(self.edge_var_end + (x - self.tau_end))
        } else {
            let v = self.log_v0 + (x - self.tau_end - self.mid_len);
            let ev = v.exp();
            Decoded::Log(ev, ev)
        }
    }

    /// Abstract coordinate of a given edge-variable value (for seeding
    /// breakpoints), or None if out of range.
    fn encode(&self, value: f64) -> Option<f64> {
        if value <= 0.0 {
            return None;
        }
        if value <= self.edge_var_end {
            Some(value.powf(1.0 / self.inv_one_minus_beta))
        } else if value <= self.edge_var_end + self.mid_len {
            Some(self.tau_end + (value - self.edge_var_end))
        } else if self.log_len > 0.0 {
            let v = value.ln();
            if v < self.log_v0 + self.log_len {
                Some(self.tau_end + self.mid_len + (v - self.log_v0))
            } else {
                None
            }
        } else {
            None
        }
    }

    /// Seed panels: geometric refinement inside the edge zone, dyadic mid
    /// panels, fixed-width log panels, with `extra` boundaries inserted.
    fn seed_panels(&self, extra: &[f64]) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = vec![0.0];
        if self.tau_end > 0.0 {
            cuts.push(self.tau_end / 64.0);
            cuts.push(self.tau_end / 8.0);
            cuts.push(self.tau_end);
        }
        let mid_end = self.tau_end + self.mid_len;
        if self.mid_len > 0.0 {
            let mut w = self.mid_len / 16.0;
            let mut xm = self.tau_end;
            while xm + w < mid_end {
                xm += w;
                cuts.push(xm);
                w *= 2.0;
            }
            cuts.push(mid_end);
        }
        if self.log_len > 0.0 {
            let k = (self.log_len / 6.0).ceil().max(1.0) as usize;
            for i in 1..=k {
                cuts.push(mid_end + self.log_len * i as f64 / k as f64);
            }
        }
        for &e in extra {
            if let Some(x) = self.encode(e) {
                if x > 0.0 && x < self.total_len() {
                    cuts.push(x);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * self.total_len());
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[0], w[1]))
            .collect()
    }
}

struct ShellIntegrand<'p, 'a> {
    f: &'p ExteriorIntegrand<'a>,
    dim: SpaceDim,
    center: Point,
    r: f64,
    map: ZoneMap,
    angular_rel: f64,
    angular_abs_budget: f64,
}

impl ShellIntegrand<'_, '_> {
    /// (ρ, exact t, radial Jacobian d(ρ-measure)/d(abstract) including ρ^{n−1})
    fn decode(&self, x: f64) -> (f64, f64, f64) {
        let n = self.dim.nf();
        match self.map.decode(x) {
            Decoded::Edge(t, dtdx) => {
                let rho = (self.r * self.r + t).sqrt();
                // dρ/dt = 1/(2ρ)
                (rho, t, rho.powf(n - 1.0) * dtdx / (2.0 * rho))
            }
            Decoded::Mid(t) => {
                let rho = (self.r * self.r + t).sqrt();
                (rho, t, rho.powf(n - 1.0) / (2.0 * rho))
            }
            Decoded::Log(t, dtdx) => {
                let rho = (self.r * self.r + t).sqrt();
                (rho, t, rho.powf(n - 1.0) * dtdx / (2.0 * rho))
            }
        }
    }
}

impl Integrand1d for ShellIntegrand<'_, '_> {
    fn eval(&self, x: f64) -> NodeOut {
        let (rho, t, jac) = self.decode(x);
        let breaks = self
            .f
            .polar_breaks_at
            .map(|g| g(rho))
            .unwrap_or_default();
        let spec = AngularSpec {
            axis: self.f.axis,
            breaks,
            polar_order: 16,
            azim: 24,
            rel_tol: self.angular_rel,
            abs_floor: self.angular_abs_budget / jac.max(f64::MIN_POSITIVE),
            max_doublings: 3,
        };
        let g = |omega: &Point| {
            let y = self.center.add_scaled(rho, omega);
            (self.f.eval)(&y, rho, t)
        };
        let (a, a_err, cost) = integrate_sphere(self.dim, &spec, &g);
        NodeOut {
            value: jac * a,
            aux_error: jac * a_err,
            cost,
        }
    }

    fn parallel_nodes(&self) -> bool {
        true
    }
}

/// Integrate over { |y − c| > r } with radial shells around the ball center.
pub fn integrate_exterior(
    f: &ExteriorIntegrand<'_>,
    ball: &Ball,
    spec: &QuadratureSpec,
) -> Result<EvalResult> {
    check_edge_exponent(f.edge_exponent)?;
    spec.validate()?;
    let dim = ball.dim();
    let r = ball.radius();
    // (1+ρ)^e ≤ ρ^e for e < 0: the decay bound holds with M_eff = M.
    let (t_rad, rem) = truncation_radius(
        dim,
        f.decay.tail_exponent,
        f.decay.bound_constant,
        0.5 * spec.abs_tol,
        spec.tail_safety,
        2.5 * r,
    )?;
    let mut t_rad = t_rad;
    for &b in &f.radial_breaks {
        if b > t_rad {
            t_rad = 1.5 * b; // never truncate before a declared feature
        }
    }

    // Edge variable is t = ρ² − r², over (0, T² − r²].
    let top = (t_rad - r) * (t_rad + r);
    let edge_end = (r * r).min(top);
    let log_start = {
        let lambda_rho: f64 = 64.0 * r;
        ((lambda_rho - r) * (lambda_rho + r)).min(top)
    };
    let map = ZoneMap::new(f.edge_exponent, edge_end, log_start, top);
    let break_ts: Vec<f64> = f
        .radial_breaks
        .iter()
        .filter(|&&b| b > r)
        .map(|&b| (b - r) * (b + r))
        .collect();
    let seeds = map.seed_panels(&break_ts);

    let problem = ShellIntegrand {
        f,
        dim,
        center: *ball.center(),
        r,
        map: map.clone(),
        angular_rel: 0.3 * spec.rel_tol,
        angular_abs_budget: 0.1 * spec.abs_tol / map.total_len().max(f64::MIN_POSITIVE),
    };
    let out = adaptive(
        &problem,
        &seeds,
        spec.rel_tol,
        0.5 * spec.abs_tol,
        spec.max_evals,
    );
    finish("exterior shells", out, rem, spec)
}

fn finish(
    context: &str,
    out: Adapt1dOut,
    tail_remainder: f64,
    spec: &QuadratureSpec,
) -> Result<EvalResult> {
    let result = EvalResult {
        value: out.value,
        error_estimate: out.error + tail_remainder,
        n_evals: out.n_evals,
    };
    if out.converged {
        Ok(result)
    } else {
        Err(Error::ConvergenceFailure {
            partial: result,
            context: format!(
                "{context}: budget {} exhausted before tolerance (rel {}, abs {})",
                spec.max_evals, spec.rel_tol, spec.abs_tol
            ),
        })
    }
}

/// Per-ray geometry for the ray-parametrized engine.
struct RayProblem<'p, 'a> {
    f: &'p RayIntegrand<'a>,
    dim: SpaceDim,
    x: Point,
    /// b = c − x, a = |b|
    b: Point,
    r2_minus_a2: f64,
    s_trunc: f64,
    frame: Frame,
    rel_inner: f64,
    abs_inner: f64,
    inner_budget: u64,
    azim0: usize,
}

impl RayProblem<'_, '_> {
    /// 1-D integral along one ray: ∫_{s₀(ω)}^{S_T} f(y) s^{n−1} ds,
    /// returned with its error estimate and cost.
    fn ray(&self, omega: &Point) -> (f64, f64, u64) {
        let n = self.dim.nf();
        let d = omega.dot(&self.b);
        let q = (d * d + self.r2_minus_a2).sqrt();
        // Stable sphere crossing: s₀ = d + q, rewritten when d < 0.
        let s0 = if d >= 0.0 {
            d + q
        } else {
            self.r2_minus_a2 / (q - d)
        };
        let xi_top = self.s_trunc - s0;
        if xi_top <= 0.0 {
            return (0.0, 0.0, 0);
        }
        let edge_end = q.min(xi_top);
        let log_start = (64.0 * (s0 + q) + 1.0).min(xi_top);
        let map = ZoneMap::new(self.f.edge_exponent, edge_end, log_start, xi_top);

        // Half-space support kink: the ray crosses y_n = 0 at
        // s = −x_n / ω_n when ω_n < 0.
        let mut extra = Vec::new();
        if self.f.halfspace_breaks {
            let wn = omega.last();
            if wn < 0.0 {
                let sp = -self.x.last() / wn;
                let xi_p = sp - s0;
                if xi_p > 0.0 && xi_p < xi_top {
                    extra.push(xi_p);
                }
            }
        }
        if let Some(rb) = self.f.origin_sphere_break {
            // |x + sω| = rb has one positive root when |x| < rb.
            let xd = omega.dot(&self.x);
            let disc = xd * xd + rb * rb - self.x.norm_sq();
            if disc > 0.0 {
                let s_star = disc.sqrt() - xd;
                let xi_star = s_star - s0;
                if xi_star > 0.0 && xi_star < xi_top {
                    extra.push(xi_star);
                }
            }
        }
        let seeds = map.seed_panels(&extra);
        let g = move |xi_abstract: f64| -> f64 {
            let (xi, dxi) = match map.decode(xi_abstract) {
                Decoded::Edge(v, dv) => (v, dv),
                Decoded::Mid(v) => (v, 1.0),
                Decoded::Log(v, dv) => (v, dv),
            };
            let s = s0 + xi;
            let t = xi * (xi + 2.0 * q);
            let y = self.x.add_scaled(s, omega);
            (self.f.eval)(&y, s, t) * s.powf(n - 1.0) * dxi
        };
        let out = adaptive(&g, &seeds, self.rel_inner, self.abs_inner, self.inner_budget);
        // Non-convergence shows up as a large error estimate; the outer
        // level decides whether the total still meets tolerance.
        (out.value, out.error, out.n_evals)
    }
}

impl RayProblem<'_, '_> {
    /// Cross-section at polar angle θ: Σ_η w_η ray(ω(θ, η)) with η running
    /// over quadrature nodes of S^{n−2} (embedded in the first n−1 local
    /// coordinates). Exact for n = 2 (two nodes), a rule otherwise.
    fn cross_section(&self, st: f64, ct: f64, polar: usize, azim: usize) -> (f64, f64, u64) {
        let n = self.dim.n();
        let mut sub: Vec<([f64; MAX_DIM], f64)> = Vec::new();
        lower_sphere_nodes(n - 1, polar, azim, &mut sub);
        let mut vals = Vec::with_capacity(sub.len());
        let mut ws = Vec::with_capacity(sub.len());
        let mut errs = 0.0;
        let mut cost = 0u64;
        for (eta, ew) in &sub {
            let mut local = [0.0_f64; MAX_DIM];
            for i in 0..n - 1 {
                local[i] = st * eta[i];
            }
            local[n - 1] = ct;
            let omega = self.frame.apply(&local);
            let (v, e, c) = self.ray(&omega);
            vals.push(v);
            ws.push(*ew);
            errs += e * ew;
            cost += c;
        }
        (crate::exec::pairwise_dot(&ws, &vals), errs, cost)
    }
}

impl Integrand1d for RayProblem<'_, '_> {
    /// Outer polar integrand F(θ), including sin^{n−2}θ and the
    /// cross-section average.
    fn eval(&self, theta: f64) -> NodeOut {
        let n = self.dim.n();
        let (st, ct) = (theta.sin(), theta.cos());
        let jac = st.powi(n as i32 - 2);
        if n == 2 {
            // S^0 cross-section is two exact rays.
            let (v, e, c) = self.cross_section(st, ct, 16, self.azim0);
            return NodeOut {
                value: jac * v,
                aux_error: jac * e,
                cost: c,
            };
        }
        // One escalation step supplies the cross-section error handle.
        let (v0, _e0, c0) = self.cross_section(st, ct, 16, self.azim0);
        let m1 = self.azim0 + self.azim0 / 2;
        let (v1, e1, c1) = self.cross_section(st, ct, 24, m1);
        NodeOut {
            value: jac * v1,
            aux_error: jac * (e1 + (v1 - v0).abs()),
            cost: c0 + c1,
        }
    }

    fn parallel_nodes(&self) -> bool {
        true
    }
}

/// Integrate over { |y − c| > r } along rays from the interior point x.
pub fn integrate_exterior_rays(
    f: &RayIntegrand<'_>,
    ball: &Ball,
    x: &Point,
    spec: &QuadratureSpec,
) -> Result<EvalResult> {
    check_edge_exponent(f.edge_exponent)?;
    spec.validate()?;
    let dim = ball.dim();
    let r = ball.radius();
    let b = ball.center().sub(x);
    let a = b.norm();
    if a >= r {
        return Err(Error::invalid(format!(
            "ray parametrization needs a strictly interior point: |x - c| = {a} >= r = {r}"
        )));
    }
    // Bound usable for truncation: for s ≥ 2(|x|+1), 1 + |y| ≥ 1 + s − |x| ≥ s/2.
    let e = f.decay.tail_exponent;
    let m_eff = f.decay.bound_constant * 2f64.powf(e.abs());
    let floor = (4.0 * r).max(2.0 * (x.norm() + 1.0));
    let (s_trunc, rem) = truncation_radius(
        dim,
        e,
        m_eff,
        0.5 * spec.abs_tol,
        spec.tail_safety,
        floor,
    )?;

    let peak_axis = if a > 0.0 {
        Some(x.sub(ball.center()).scale(1.0 / a))
    } else {
        None
    };
    let frame = Frame::new(dim, peak_axis.as_ref());

    let problem = RayProblem {
        f,
        dim,
        x: *x,
        b,
        r2_minus_a2: (r - a) * (r + a),
        s_trunc,
        frame,
        rel_inner: 0.25 * spec.rel_tol,
        abs_inner: 0.25 * spec.abs_tol / sphere_area(dim),
        inner_budget: (spec.max_evals / 256).clamp(20_000, 2_000_000),
        azim0: 16,
    };

    if dim.n() == 1 {
        // No angular integral: two rays, each with its own error handle.
        let er = Point::axis(dim, 0, 1.0).expect("dim 1");
        let el = Point::axis(dim, 0, -1.0).expect("dim 1");
        let (v1, e1, c1) = problem.ray(&er);
        let (v2, e2, c2) = problem.ray(&el);
        let value = v1 + v2;
        let error = e1 + e2 + rem;
        let res = EvalResult {
            value,
            error_estimate: error,
            n_evals: c1 + c2,
        };
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(res);
        }
        return Err(Error::ConvergenceFailure {
            partial: res,
            context: "exterior rays (n=1): ray tolerances missed".into(),
        });
    }

    // Outer polar panels, graded into the peak of width θ* ≈ √(2(r−a)/r).
    let theta_star = (2.0 * (r - a) / r).sqrt().clamp(1e-4, 0.7);
    let mut cuts = vec![0.0, 0.5 * theta_star];
    let mut th = theta_star;
    while th < std::f64::consts::PI {
        cuts.push(th);
        th *= 2.0;
    }
    cuts.push(std::f64::consts::PI);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
    let seeds: Vec<(f64, f64)> = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1]))
        .collect();

    let out = adaptive(
        &problem,
        &seeds,
        spec.rel_tol,
        0.5 * spec.abs_tol,
        spec.max_evals,
    );
    finish("exterior rays", out, rem, spec)
}

/// Where a field's support interface cuts the shells around x, expressed in
/// the engines' break vocabulary: exact radial onset radii plus per-shell
/// polar angles, graded into the interface because half-space data is only
/// Hölder there (y_n^{α/2} kinks hard at y_n = 0).
#[derive(Clone, Debug)]
pub struct SupportBreaks {
    pub axis: Option<Point>,
    pub radial: Vec<f64>,
    kind: BreakKind,
}

#[derive(Clone, Debug)]
enum BreakKind {
    None,
    /// y_n = 0 seen from x with x_n > 0.
    Plane { xn: f64 },
    /// Sphere of radius rb whose center sits at distance d from x along axis.
    Sphere { d: f64, rb: f64 },
}

/// Graded cluster of polar angles around one interface angle.
fn graded_cluster(theta0: f64, out: &mut Vec<f64>) {
    let w = 0.12 * theta0.min(std::f64::consts::PI - theta0);
    if !(w > 0.0) {
        return;
    }
    for off in [-w, -w / 16.0, -w / 256.0, 0.0, w / 256.0, w / 16.0, w] {
        let th = theta0 + off;
        if th > 1e-12 && th < std::f64::consts::PI - 1e-12 {
            out.push(th);
        }
    }
}

impl SupportBreaks {
    /// Interface geometry of `support` as seen from shells centered at x.
    pub fn for_support(support: &crate::field::Support, x: &Point) -> SupportBreaks {
        use crate::field::Support;
        match support {
            Support::AllSpace => SupportBreaks {
                axis: None,
                radial: Vec::new(),
                kind: BreakKind::None,
            },
            Support::UpperHalfSpace => {
                let xn = x.last();
                if xn <= 0.0 {
                    // x on or below the interface: the plane passes through
                    // every shell; no radial onset, fixed polar angle π/2
                    // handled by the Plane formula with xn clamped.
                    return SupportBreaks {
                        axis: Point::axis(x.dim(), x.dim().n() - 1, 1.0).ok(),
                        radial: Vec::new(),
                        kind: BreakKind::Plane { xn: xn.max(0.0) },
                    };
                }
                SupportBreaks {
                    axis: Point::axis(x.dim(), x.dim().n() - 1, 1.0).ok(),
                    radial: vec![xn],
                    kind: BreakKind::Plane { xn },
                }
            }
            Support::ExteriorOfBall(b) => {
                let d = x.dist(b.center());
                if d == 0.0 {
                    return SupportBreaks {
                        axis: None,
                        radial: vec![b.radius()],
                        kind: BreakKind::None,
                    };
                }
                SupportBreaks {
                    axis: Some(b.center().sub(x).scale(1.0 / d)),
                    radial: vec![(d - b.radius()).abs(), d + b.radius()],
                    kind: BreakKind::Sphere { d, rb: b.radius() },
                }
            }
            Support::Compact { radius } => {
                let d = x.norm();
                if d == 0.0 {
                    return SupportBreaks {
                        axis: None,
                        radial: vec![*radius],
                        kind: BreakKind::None,
                    };
                }
                SupportBreaks {
                    axis: Some(x.scale(-1.0 / d)),
                    radial: vec![(d - radius).abs(), d + radius],
                    kind: BreakKind::Sphere { d, rb: *radius },
                }
            }
        }
    }

    /// Polar angles (measured from `axis`) where the interface crosses the
    /// shell of radius rho, graded for Hölder data.
    pub fn polar_at(&self, rho: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match self.kind {
            BreakKind::None => {}
            BreakKind::Plane { xn } => {
                // y = x + ρω crosses y_n = 0 at cos θ = −x_n/ρ (axis = e_n).
                let c = -xn / rho;
                if c > -1.0 && c < 1.0 {
                    graded_cluster(c.acos(), &mut out);
                }
            }
            BreakKind::Sphere { d, rb } => {
                let c = (d * d + rho * rho - rb * rb) / (2.0 * d * rho);
                if c > -1.0 && c < 1.0 {
                    graded_cluster(c.acos(), &mut out);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn has_interface(&self) -> bool {
        !matches!(self.kind, BreakKind::None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{FracOrder, SpaceDim};

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn zero_integrand_is_exact_zero() {
        let dim = SpaceDim::new(2).unwrap();
        let ball = Ball::new(Point::zero(dim), 1.0).unwrap();
        let eval = |_: &Point, _: f64, _: f64| 0.0;
        let f = ExteriorIntegrand::new(&eval, 0.5, DecayClass::new(-10.0, 1.0).unwrap());
        let out = integrate_exterior(&f, &ball, &spec()).unwrap();
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn plain_power_tail() {
        // ∫_{|y|>1, n=1} |y|^{-3} dy = 2 · [ρ^{-2}/2] = 1.
        let dim = SpaceDim::new(1).unwrap();
        let ball = Ball::new(Point::zero(dim), 1.0).unwrap();
        let eval = |y: &Point, _rho: f64, _t: f64| y.norm().powi(-3);
        let f = ExteriorIntegrand::new(&eval, 0.0, DecayClass::new(-3.0, 8.0).unwrap());
        let out = integrate_exterior(&f, &ball, &spec()).unwrap();
        assert!(
            (out.value - 1.0).abs() < 1e-8,
            "value {} err {}",
            out.value,
            out.error_estimate
        );
    }

    #[test]
    fn edge_singular_integral_n1() {
        // 2∫_1^∞ (ρ²−1)^{-1/2} ρ^{-2} dρ = 2 (substitute ρ = sec u).
        let alpha = FracOrder::new(1.0).unwrap();
        let dim = SpaceDim::new(1).unwrap();
        let ball = Ball::new(Point::zero(dim), 1.0).unwrap();
        let eval = move |_y: &Point, rho: f64, t: f64| t.powf(-0.5) / (rho * rho);
        let f = ExteriorIntegrand::new(
            &eval,
            0.5 * alpha.alpha(),
            DecayClass::new(-3.0, 4.0).unwrap(),
        );
        let out = integrate_exterior(&f, &ball, &spec()).unwrap();
        assert!(
            (out.value - 2.0).abs() < 1e-8,
            "value {} err {}",
            out.value,
            out.error_estimate
        );
    }

    #[test]
    fn ray_engine_matches_shell_engine() {
        // Smooth decaying integrand, n = 2, x off-center.
        let dim = SpaceDim::new(2).unwrap();
        let ball = Ball::new(Point::zero(dim), 1.0).unwrap();
        let x = Point::new(&[0.4, 0.2]).unwrap();
        let decay = DecayClass::new(-4.0, 30.0).unwrap();
        let shell_eval = |y: &Point, _: f64, _: f64| (1.0 + y.norm_sq()).powi(-2);
        let fs = ExteriorIntegrand::new(&shell_eval, 0.0, decay);
        let shells = integrate_exterior(&fs, &ball, &spec()).unwrap();
        let ray_eval = |y: &Point, _: f64, _: f64| (1.0 + y.norm_sq()).powi(-2);
        let fr = RayIntegrand::new(&ray_eval, 0.0, decay);
        let rays = integrate_exterior_rays(&fr, &ball, &x, &spec()).unwrap();
        assert!(
            (shells.value - rays.value).abs()
                < 10.0 * (shells.error_estimate + rays.error_estimate).max(1e-12),
            "shells {} rays {}",
            shells.value,
            rays.value
        );
    }

    #[test]
    fn inadmissible_decay_rejected_before_work() {
        let dim = SpaceDim::new(2).unwrap();
        let ball = Ball::new(Point::zero(dim), 1.0).unwrap();
        let eval = |_: &Point, _: f64, _: f64| 1.0;
        let f = ExteriorIntegrand::new(&eval, 0.0, DecayClass::new(-1.5, 1.0).unwrap());
        assert!(matches!(
            integrate_exterior(&f, &ball, &spec()),
            Err(Error::InvalidArgument(_))
        ));
    }
}
