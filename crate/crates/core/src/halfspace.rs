//! Half-space machinery: the explicit profile C x_n^{α/2} that is
//! α-harmonic on { x_n > 0 } and zero below, its Poisson extension over
//! interior balls, the boundary/bulk split of the extension's derivatives,
//! and the Riesz identity that pins the kernel normalization.
//!
//! The derivative split differentiates under the integral: with
//! P(x, y) = c gap(x)^{α/2} t^{−α/2} |x−y|^{−n} and gap(x) = r² − |x−c|²,
//!
//!   ∂_i P = −α (x_i − c_i) / gap · P  +  n (y_i − x_i) |x−y|^{−2} · P,
//!
//! so each derivative is a "boundary" multiple of the extension itself plus
//! a "bulk" integral with one extra power of decay. Everything here rides on
//! the exterior quadrature engines; balls tangent to the boundary from
//! inside (see [`tangent_ball`]) are the geometry the decay studies use.

use crate::error::Error;
use crate::exec::par_map;
use crate::field::{DecayClass, ScalarField, Support};
use crate::geom::{Ball, FracOrder, Point, SpaceDim};
use crate::kernels::{poisson_kernel_parts, riesz_kernel};
use crate::quadrature::adapt1d::{adaptive, Integrand1d, NodeOut};
use crate::quadrature::angular::{integrate_sphere, AngularSpec};
use crate::quadrature::{
    integrate_exterior, integrate_exterior_rays, EvalResult, ExteriorIntegrand, QuadratureSpec,
    RayIntegrand,
};
use crate::report::{ConvergenceReport, ReportRow};
use crate::special::{normalization_constant, sphere_area};
use crate::Result;
use serde::{Deserialize, Serialize};

/// The one-parameter family C x_n^{α/2}, extended by zero below the
/// boundary. Up to the constant C > 0 it is the only function that is
/// α-harmonic on the upper half-space, vanishes below it, and grows slower
/// than x_n^{α}.
#[derive(Copy, Clone, Debug)]
pub struct LiouvilleSolution {
    c: f64,
    alpha: FracOrder,
    dim: SpaceDim,
}

impl LiouvilleSolution {
    pub fn new(c: f64, alpha: FracOrder, dim: SpaceDim) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid(format!(
                "the profile constant must be positive and finite, got {c}"
            )));
        }
        Ok(LiouvilleSolution { c, alpha, dim })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> FracOrder {
        self.alpha
    }

    pub fn dim(&self) -> SpaceDim {
        self.dim
    }

    /// C x_n^{α/2} for x_n > 0, 0 otherwise.
    pub fn eval_at(&self, x: &Point) -> Result<f64> {
        if x.dim() != self.dim {
            return Err(Error::invalid("profile evaluated in the wrong dimension"));
        }
        Ok(self.c * x.last().max(0.0).powf(0.5 * self.alpha.alpha()))
    }

    /// The profile as a field: half-space support, growth exponent α/2.
    pub fn field(&self) -> ScalarField {
        let c = self.c;
        let half = 0.5 * self.alpha.alpha();
        ScalarField::new(
            self.dim,
            Support::UpperHalfSpace,
            DecayClass::new(half, c).expect("validated at construction"),
            |x: &Point| x.last() > 0.0,
            move |y: &Point| c * y.last().max(0.0).powf(half),
        )
        .expect("the profile vanishes below the boundary by construction")
    }
}

/// The ball of radius r centered at (0, …, 0, r): inside the upper
/// half-space, tangent to its boundary at the origin. For these balls
/// gap(x) = r² − |x−c|² = 2 x_n r − |x|², so the gap grows linearly in r at
/// a fixed interior point, which is what drives the decay studies.
pub fn tangent_ball(dim: SpaceDim, r: f64) -> Result<Ball> {
    Ball::new(Point::axis(dim, dim.n() - 1, r)?, r)
}

/// Tail bound for Poisson-kernel integrands in the ray engine's vocabulary,
/// |integrand| ≤ M (1+|y|)^e. The engine truncates only at s = |x−y| ≥ 4r,
/// where ρ = |y−c| ≥ 3r, so t ≥ (8/9)ρ², s ≥ (2/3)ρ, and 1+|y| is within the
/// factor geo of ρ. `extra` is a further bounded factor in the integrand,
/// |extra| ≤ extra_m (1+|y|)^{extra_e} on the same range.
fn poisson_tail_decay(
    u: &ScalarField,
    ball: &Ball,
    alpha: FracOrder,
    gap: f64,
    extra_e: f64,
    extra_m: f64,
) -> Result<DecayClass> {
    let n = ball.dim().nf();
    let a = alpha.alpha();
    let r = ball.radius();
    let cnorm = normalization_constant(ball.dim(), alpha);
    let geo = 1.0 + (1.0 + ball.center().norm()) / (3.0 * r);
    let m_kernel = cnorm * gap.powf(0.5 * a) * (9.0 / 8.0) * 1.5_f64.powf(n) * geo.powf(n + a);
    let du = u.decay();
    // A decaying field's own bound is dropped (its constant may be huge for
    // a crude global bound, and e = 0 only makes the truncation radius
    // conservative); a growing field's is kept, it is what keeps the tail
    // integrable at all.
    let (e_u, m_u) = if du.tail_exponent > 0.0 {
        (du.tail_exponent, du.bound_constant)
    } else {
        (0.0, du.bound_constant)
    };
    DecayClass::new(e_u - n - a + extra_e, m_u * m_kernel * extra_m)
}

fn check_extend_args(u: &ScalarField, ball: &Ball, x: &Point, alpha: FracOrder) -> Result<()> {
    if u.dim() != ball.dim() || x.dim() != ball.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: field {}, ball {}, point {}",
            u.dim().n(),
            ball.dim().n(),
            x.dim().n()
        )));
    }
    if !u.decay().admissible_for(alpha) {
        return Err(Error::invalid(format!(
            "field growth exponent {} is not integrable against the order-{} Poisson tail (needs < {})",
            u.decay().tail_exponent,
            alpha.alpha(),
            alpha.alpha()
        )));
    }
    if !ball.is_strictly_interior(x) {
        return Err(Error::invalid(format!(
            "the extension is defined strictly inside the ball; |x - c| = {} with r = {}",
            x.dist(ball.center()),
            ball.radius()
        )));
    }
    Ok(())
}

/// (E_r u)(x) = ∫_{|y−c|>r} P(x, y) u(y) dy, the unique function that is
/// α-harmonic inside the ball and agrees with u outside. Half-space data is
/// split exactly where rays cross the boundary plane; data supported on or
/// outside a sphere has no exact ray break and is resolved adaptively.
pub fn poisson_extend(
    u: &ScalarField,
    ball: &Ball,
    x: &Point,
    alpha: FracOrder,
    spec: &QuadratureSpec,
) -> Result<EvalResult> {
    spec.validate()?;
    check_extend_args(u, ball, x, alpha)?;
    let dim = ball.dim();
    let r = ball.radius();
    let a = x.dist(ball.center());
    let gap = (r - a) * (r + a);
    let eval = move |y: &Point, s: f64, t: f64| -> f64 {
        let uy = u.eval(y);
        if uy == 0.0 {
            return 0.0;
        }
        poisson_kernel_parts(dim, alpha, gap, t, s) * uy
    };
    let decay = poisson_tail_decay(u, ball, alpha, gap, 0.0, 1.0)?;
    let mut f = RayIntegrand::new(&eval, 0.5 * alpha.alpha(), decay);
    f.halfspace_breaks = matches!(u.support(), Support::UpperHalfSpace);
    integrate_exterior_rays(&f, ball, x, spec)
}

/// One directional derivative of the extension, split into the factor that
/// differentiates gap^{α/2} (a multiple of the extension itself) and the
/// bulk integral that differentiates |x−y|^{−n}. `total` is the exact sum of
/// the two term values.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeDecomposition {
    /// 0-based coordinate index of the derivative direction.
    pub direction: usize,
    pub term_boundary: EvalResult,
    pub term_bulk: EvalResult,
    pub total: f64,
}

/// ∫ n (y_i − x_i) |x−y|^{−2} P(x, y) u(y) dy, optionally restricted to
/// |y| > cutoff (with the crossing split exactly on every ray).
fn bulk_term(
    u: &ScalarField,
    ball: &Ball,
    x: &Point,
    direction: usize,
    alpha: FracOrder,
    cutoff: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<EvalResult> {
    let dim = ball.dim();
    let nf = dim.nf();
    let r = ball.radius();
    let a = x.dist(ball.center());
    let gap = (r - a) * (r + a);
    let xp = *x;
    let eval = move |y: &Point, s: f64, t: f64| -> f64 {
        if let Some(rb) = cutoff {
            if y.norm() <= rb {
                return 0.0;
            }
        }
        let uy = u.eval(y);
        if uy == 0.0 {
            return 0.0;
        }
        let geom = nf * (y.coord(direction) - xp.coord(direction)) / (s * s);
        poisson_kernel_parts(dim, alpha, gap, t, s) * uy * geom
    };
    // |n (y_i − x_i)/s²| ≤ n/s ≤ 1.5 n / (1+|y|) once s ≥ 2(|x|+1), which
    // holds wherever the engine applies the bound.
    let decay = poisson_tail_decay(u, ball, alpha, gap, -1.0, 1.5 * nf)?;
    let mut f = RayIntegrand::new(&eval, 0.5 * alpha.alpha(), decay);
    f.halfspace_breaks = matches!(u.support(), Support::UpperHalfSpace);
    f.origin_sphere_break = cutoff;
    integrate_exterior_rays(&f, ball, x, spec)
}

fn decomposition(
    u: &ScalarField,
    ball: &Ball,
    x: &Point,
    direction: usize,
    alpha: FracOrder,
    spec: &QuadratureSpec,
) -> Result<DerivativeDecomposition> {
    spec.validate()?;
    check_extend_args(u, ball, x, alpha)?;
    if direction >= ball.dim().n() {
        return Err(Error::invalid(format!(
            "derivative direction {direction} out of range for dimension {}",
            ball.dim().n()
        )));
    }
    let part = QuadratureSpec::new(
        spec.rel_tol,
        0.5 * spec.abs_tol,
        (spec.max_evals / 2).max(1000),
        spec.tail_safety,
    )?;
    let ext = poisson_extend(u, ball, x, alpha, &part)?;
    let r = ball.radius();
    let a = x.dist(ball.center());
    let gap = (r - a) * (r + a);
    let factor = -alpha.alpha() * (x.coord(direction) - ball.center().coord(direction)) / gap;
    let term_boundary = EvalResult {
        value: factor * ext.value,
        error_estimate: factor.abs() * ext.error_estimate,
        n_evals: ext.n_evals,
    };
    let term_bulk = bulk_term(u, ball, x, direction, alpha, None, &part)?;
    Ok(DerivativeDecomposition {
        direction,
        term_boundary,
        term_bulk,
        total: term_boundary.value + term_bulk.value,
    })
}

/// ∂_i (E_r u)(x) for a direction parallel to the boundary (i < n−1).
pub fn tangential_derivative(
    u: &ScalarField,
    ball: &Ball,
    x: &Point,
    direction: usize,
    alpha: FracOrder,
    spec: &QuadratureSpec,
) -> Result<DerivativeDecomposition> {
    let n = ball.dim().n();
    if direction + 1 >= n {
        return Err(Error::invalid(format!(
            "tangential directions are the first {} coordinate(s), got index {direction}",
            n - 1
        )));
    }
    decomposition(u, ball, x, direction, alpha, spec)
}

/// ∂_n (E_r u)(x), the derivative normal to the boundary.
pub fn normal_derivative(
    u: &ScalarField,
    ball: &Ball,
    x: &Point,
    alpha: FracOrder,
    spec: &QuadratureSpec,
) -> Result<DerivativeDecomposition> {
    let n = ball.dim().n();
    decomposition(u, ball, x, n - 1, alpha, spec)
}

/// Residual of the radial equation u'(x_n) = (α / 2x_n) u(x_n) satisfied by
/// the profile, evaluated analytically. Zero to rounding for every x_n > 0;
/// this is the closed-form limit the normal-derivative ladder converges to.
pub fn verify_liouville_ode(sol: &LiouvilleSolution, x: &Point) -> Result<f64> {
    if x.dim() != sol.dim {
        return Err(Error::invalid("profile evaluated in the wrong dimension"));
    }
    let xn = x.last();
    if !(xn > 0.0) {
        return Err(Error::domain(
            "the radial equation holds only above the boundary (x_n > 0)",
        ));
    }
    let a = sol.alpha.alpha();
    let derivative = sol.c * 0.5 * a * xn.powf(0.5 * a - 1.0);
    let rhs = 0.5 * a / xn * sol.c * xn.powf(0.5 * a);
    Ok(derivative - rhs)
}

/// Surface average of P(x, ·) on spheres around z, in the variable
/// τ = ρ^α that flattens the |y−z|^{α−n} weight of the cap integral.
struct CapIntegrand {
    dim: SpaceDim,
    alpha: FracOrder,
    x: Point,
    z: Point,
    center: Point,
    r: f64,
    gap: f64,
    ang_rel: f64,
    ang_abs: f64,
}

impl Integrand1d for CapIntegrand {
    fn eval(&self, tau: f64) -> NodeOut {
        let a = self.alpha.alpha();
        let rho = tau.powf(1.0 / a);
        let spec = AngularSpec::smooth(self.ang_rel, self.ang_abs);
        let f = |w: &Point| -> f64 {
            let y = self.z.add_scaled(rho, w);
            let t = y.dist_sq(&self.center) - self.r * self.r;
            let s = y.dist(&self.x);
            poisson_kernel_parts(self.dim, self.alpha, self.gap, t, s)
        };
        let (v, e, cost) = integrate_sphere(self.dim, &spec, &f);
        NodeOut {
            value: v / a,
            aux_error: e / a,
            cost,
        }
    }

    fn parallel_nodes(&self) -> bool {
        true
    }
}

/// Relative residual of |x−z|^{α−n} = ∫_{|y−c|>r} P(x, y) |y−z|^{α−n} dy for
/// x strictly inside and z strictly outside the ball (n > α).
///
/// The z-singularity is integrable; it is handled by cutting out the ball of
/// radius η = (|z−c| − r)/2 around z (its circle on each shell is an exact
/// polar break) and integrating the cap separately in the variable τ = ρ^α,
/// where the radial weight ρ^{α−1} becomes dτ/α and the remaining surface
/// average is smooth.
pub fn riesz_identity_residual(
    ball: &Ball,
    x: &Point,
    z: &Point,
    alpha: FracOrder,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let dim = ball.dim();
    if x.dim() != dim || z.dim() != dim {
        return Err(Error::invalid("riesz identity: dimension mismatch"));
    }
    if dim.nf() <= alpha.alpha() {
        return Err(Error::invalid(format!(
            "the riesz identity needs n > alpha, got n = {}, alpha = {}",
            dim.n(),
            alpha.alpha()
        )));
    }
    if !ball.is_strictly_interior(x) {
        return Err(Error::invalid("riesz identity: x must lie strictly inside"));
    }
    if !ball.is_strictly_exterior(z) {
        return Err(Error::invalid(
            "riesz identity: z must lie strictly outside",
        ));
    }
    let lhs = riesz_kernel(dim, alpha, x, z)?;
    let a = alpha.alpha();
    let n = dim.nf();
    let r = ball.radius();
    let center = *ball.center();
    let xp = *x;
    let zp = *z;
    let rho_z = z.dist(&center);
    let eta = 0.5 * (rho_z - r);
    let dx = x.dist(&center);
    let gap = (r - dx) * (r + dx);
    let cnorm = normalization_constant(dim, alpha);
    let part = QuadratureSpec::new(
        spec.rel_tol,
        0.5 * spec.abs_tol,
        (spec.max_evals / 2).max(1000),
        spec.tail_safety,
    )?;

    // Main part: shells around the ball center, the excluded ball cut out.
    let eval = move |y: &Point, _rho: f64, t: f64| -> f64 {
        let dz = y.dist(&zp);
        if dz <= eta {
            return 0.0;
        }
        let s = y.dist(&xp);
        poisson_kernel_parts(dim, alpha, gap, t, s) * dz.powf(a - n)
    };
    let polar = move |rho: f64| -> Vec<f64> {
        if (rho - rho_z).abs() >= eta {
            return Vec::new();
        }
        let cosv = (rho * rho + rho_z * rho_z - eta * eta) / (2.0 * rho * rho_z);
        if cosv.abs() >= 1.0 {
            return Vec::new();
        }
        vec![cosv.acos()]
    };
    // On ρ ≥ max(2r, 2|z−c|): t ≥ (3/4)ρ², s ≥ ρ/2, |y−z| ≥ ρ/2.
    let m_main = cnorm * gap.powf(0.5 * a) * (4.0 / 3.0) * 2f64.powf(2.0 * n - a);
    let decay = DecayClass::new(-2.0 * n, m_main)?;
    let mut f = ExteriorIntegrand::new(&eval, 0.5 * a, decay);
    f.axis = Some(z.sub(&center).scale(1.0 / rho_z));
    f.polar_breaks_at = Some(&polar);
    f.radial_breaks = vec![rho_z - eta, rho_z + eta, (2.0 * r).max(2.0 * rho_z)];
    let main = integrate_exterior(&f, ball, &part)?;

    // Cap around z: (1/α) ∫_0^{η^α} (surface integral at radius τ^{1/α}) dτ.
    let h = eta.powf(a);
    let cap = CapIntegrand {
        dim,
        alpha,
        x: xp,
        z: zp,
        center,
        r,
        gap,
        ang_rel: 0.3 * part.rel_tol,
        ang_abs: 0.25 * part.abs_tol * a / h,
    };
    let seeds = [
        (0.0, h / 64.0),
        (h / 64.0, h / 8.0),
        (h / 8.0, h),
    ];
    let out = adaptive(&cap, &seeds, part.rel_tol, 0.5 * part.abs_tol, part.max_evals);
    let rhs = main.value + out.value;
    if !out.converged {
        return Err(Error::ConvergenceFailure {
            partial: EvalResult {
                value: rhs,
                error_estimate: main.error_estimate + out.error,
                n_evals: main.n_evals + out.n_evals,
            },
            context: "riesz identity: cap integral tolerances missed".into(),
        });
    }
    Ok((lhs - rhs).abs() / lhs)
}

/// |E_{r1} u (x) − E_{r2} u (x)| over the tangent balls of radii r1 and r2.
/// Both extensions agree with u outside their ball, and when u is already
/// α-harmonic where the balls differ, both reproduce u(x) and the gap
/// vanishes; otherwise it measures how far u is from α-harmonic there.
pub fn extension_consistency(
    u: &ScalarField,
    r1: f64,
    r2: f64,
    x: &Point,
    alpha: FracOrder,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let b1 = tangent_ball(u.dim(), r1)?;
    let b2 = tangent_ball(u.dim(), r2)?;
    let e1 = poisson_extend(u, &b1, x, alpha, spec)?;
    let e2 = poisson_extend(u, &b2, x, alpha, spec)?;
    Ok((e1.value - e2.value).abs())
}

/// The field that equals the Poisson extension inside the ball and u
/// outside: α-harmonic inside, untouched elsewhere. Each interior
/// evaluation runs a quadrature at `inner_spec` (a convergence shortfall
/// falls back to the partial value, so keep inner_spec comfortably looser
/// than whatever integrates this field). The ball must sit inside the
/// closed half-space, and u must be half-space data.
pub fn extension_field(
    u: &ScalarField,
    ball: &Ball,
    alpha: FracOrder,
    inner_spec: &QuadratureSpec,
) -> Result<ScalarField> {
    inner_spec.validate()?;
    if u.dim() != ball.dim() {
        return Err(Error::invalid("extension field: dimension mismatch"));
    }
    if !matches!(u.support(), Support::UpperHalfSpace) {
        return Err(Error::invalid(
            "extension fields are built over half-space data",
        ));
    }
    if !u.decay().admissible_for(alpha) {
        return Err(Error::invalid(format!(
            "field growth exponent {} is not integrable against the order-{} Poisson tail",
            u.decay().tail_exponent,
            alpha.alpha()
        )));
    }
    let r = ball.radius();
    if ball.center().last() < r {
        return Err(Error::invalid(
            "the extension ball must lie inside the half-space",
        ));
    }
    let dim = u.dim();
    let a = alpha.alpha();
    let du = u.decay();
    let e_u = du.tail_exponent;
    let e_plus = e_u.max(0.0);
    let cb = ball.center().norm();
    // Global bound for the interior values: the kernel has unit mass, so
    // data within ρ = |y−c| ≤ 2r contributes at most its sup there, and the
    // far data contributes ∫_{ρ>2r} P (1+|y|)^{e} ≤ the closed form below
    // (t ≥ (3/4)ρ², s ≥ ρ/2, gap ≤ r² inside).
    let near = if e_u > 0.0 {
        (1.0 + cb + 2.0 * r).powf(e_u)
    } else {
        1.0
    };
    let geo = 1.0 + (1.0 + cb) / (2.0 * r);
    let cnorm = normalization_constant(dim, alpha);
    let far = cnorm
        * r.powf(a)
        * (4.0 / 3.0)
        * 2f64.powf(dim.nf())
        * geo.powf(e_plus)
        * sphere_area(dim)
        * (2.0 * r).powf(e_plus - a)
        / (a - e_plus);
    let k_in = du.bound_constant * (near + far);
    let m_field = if e_u >= 0.0 {
        du.bound_constant.max(k_in)
    } else {
        du.bound_constant.max(k_in * (1.0 + cb + r).powf(-e_u))
    };
    let decay = DecayClass::new(e_u, m_field)?;
    let u_inner = u.clone();
    let ball_inner = *ball;
    let ispec = *inner_spec;
    let center = *ball.center();
    ScalarField::new(
        dim,
        Support::UpperHalfSpace,
        decay,
        move |y: &Point| y.last() > 0.0 && y.dist(&center) != r,
        move |y: &Point| {
            if ball_inner.is_strictly_interior(y) {
                match poisson_extend(&u_inner, &ball_inner, y, alpha, &ispec) {
                    Ok(res) => res.value,
                    Err(Error::ConvergenceFailure { partial, .. }) => partial.value,
                    Err(_) => f64::NAN,
                }
            } else {
                u_inner.eval(y)
            }
        },
    )
}

fn ladder_radii(x: &Point, ks: &[u32]) -> Result<Vec<f64>> {
    let xn = x.last();
    if !(xn > 0.0) {
        return Err(Error::invalid(format!(
            "dyadic ladders start at the evaluation height; x_n = {xn} must be positive"
        )));
    }
    if ks.len() < 3 {
        return Err(Error::invalid(format!(
            "a decay study needs at least 3 dyadic levels, got {}",
            ks.len()
        )));
    }
    for w in ks.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid(
                "dyadic levels must be strictly increasing",
            ));
        }
    }
    Ok(ks.iter().map(|&k| xn * 2f64.powi(k as i32)).collect())
}

/// Decay of the tangential derivative over the tangent-ball family
/// r_k = x_n 2^k: the full derivative, its boundary term (rate r^{−1}), and
/// the bulk contribution from |y| > far_radius, whose rate r^{α/2−1} is the
/// slowest piece and therefore the one that controls the limit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TangentialDecayStudy {
    pub total: ConvergenceReport,
    pub boundary: ConvergenceReport,
    pub bulk_far: ConvergenceReport,
}

pub fn tangential_decay_study(
    sol: &LiouvilleSolution,
    x: &Point,
    direction: usize,
    ks: &[u32],
    far_radius: f64,
    spec: &QuadratureSpec,
) -> Result<TangentialDecayStudy> {
    if x.dim() != sol.dim {
        return Err(Error::invalid("study point has the wrong dimension"));
    }
    if !(far_radius.is_finite() && far_radius > x.norm()) {
        return Err(Error::invalid(format!(
            "the far-field cutoff must exceed |x| = {}, got {far_radius}",
            x.norm()
        )));
    }
    let radii = ladder_radii(x, ks)?;
    let u = sol.field();
    let per = par_map(radii.len(), |i| -> Result<(DerivativeDecomposition, EvalResult)> {
        let ball = tangent_ball(sol.dim, radii[i])?;
        let d = tangential_derivative(&u, &ball, x, direction, sol.alpha, spec)?;
        let part = QuadratureSpec::new(
            spec.rel_tol,
            0.5 * spec.abs_tol,
            (spec.max_evals / 2).max(1000),
            spec.tail_safety,
        )?;
        let far = bulk_term(&u, &ball, x, direction, sol.alpha, Some(far_radius), &part)?;
        Ok((d, far))
    });
    let m = radii.len();
    let mut rows_total = Vec::with_capacity(m);
    let mut rows_boundary = Vec::with_capacity(m);
    let mut rows_far = Vec::with_capacity(m);
    let mut noise_total = Vec::with_capacity(m);
    let mut noise_boundary = Vec::with_capacity(m);
    let mut noise_far = Vec::with_capacity(m);
    for (&r, res) in radii.iter().zip(per) {
        let (d, far) = res?;
        rows_total.push(ReportRow::new(r, d.total, 0.0));
        noise_total.push(d.term_boundary.error_estimate + d.term_bulk.error_estimate);
        rows_boundary.push(ReportRow::new(r, d.term_boundary.value, 0.0));
        noise_boundary.push(d.term_boundary.error_estimate);
        rows_far.push(ReportRow::new(r, far.value, 0.0));
        noise_far.push(far.error_estimate);
    }
    let config = |term: &str| {
        serde_json::json!({
            "study": "tangential-decay",
            "term": term,
            "direction": direction,
            "alpha": sol.alpha.alpha(),
            "c": sol.c,
            "x": x,
            "ks": ks,
            "far_radius": far_radius,
            "spec": spec,
        })
    };
    Ok(TangentialDecayStudy {
        total: ConvergenceReport::new(rows_total, &noise_total, config("total")),
        boundary: ConvergenceReport::new(rows_boundary, &noise_boundary, config("boundary")),
        bulk_far: ConvergenceReport::new(rows_far, &noise_far, config("bulk-far")),
    })
}

/// Normal derivative over the tangent-ball family, against the closed-form
/// limit (α / 2x_n) u(x).
///
/// The total is exact at every radius (the extension of the profile is the
/// profile, so its derivative never moves), which makes `total` a
/// noise-floor report; the r^{−1} convergence the limit argument rests on
/// lives in the boundary term J₁, reported separately.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalLimitStudy {
    pub total: ConvergenceReport,
    pub boundary: ConvergenceReport,
}

pub fn normal_limit_study(
    sol: &LiouvilleSolution,
    x: &Point,
    ks: &[u32],
    spec: &QuadratureSpec,
) -> Result<NormalLimitStudy> {
    if x.dim() != sol.dim {
        return Err(Error::invalid("study point has the wrong dimension"));
    }
    let radii = ladder_radii(x, ks)?;
    let u = sol.field();
    let reference = 0.5 * sol.alpha.alpha() / x.last() * sol.eval_at(x)?;
    let per = par_map(radii.len(), |i| -> Result<DerivativeDecomposition> {
        let ball = tangent_ball(sol.dim, radii[i])?;
        normal_derivative(&u, &ball, x, sol.alpha, spec)
    });
    let m = radii.len();
    let mut rows_total = Vec::with_capacity(m);
    let mut rows_boundary = Vec::with_capacity(m);
    let mut noise_total = Vec::with_capacity(m);
    let mut noise_boundary = Vec::with_capacity(m);
    for (&r, res) in radii.iter().zip(per) {
        let d = res?;
        rows_total.push(ReportRow::new(r, d.total, reference));
        noise_total.push(d.term_boundary.error_estimate + d.term_bulk.error_estimate);
        rows_boundary.push(ReportRow::new(r, d.term_boundary.value, reference));
        noise_boundary.push(d.term_boundary.error_estimate);
    }
    let config = |term: &str| {
        serde_json::json!({
            "study": "normal-limit",
            "term": term,
            "reference": "alpha / (2 x_n) * u(x)",
            "alpha": sol.alpha.alpha(),
            "c": sol.c,
            "x": x,
            "ks": ks,
            "spec": spec,
        })
    };
    Ok(NormalLimitStudy {
        total: ConvergenceReport::new(rows_total, &noise_total, config("total")),
        boundary: ConvergenceReport::new(rows_boundary, &noise_boundary, config("boundary")),
    })
}
