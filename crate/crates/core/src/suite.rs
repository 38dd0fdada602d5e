//! The verification suite: named end-to-end checks with pinned tolerances.
//!
//! Each check exercises one published guarantee of the crate — kernel
//! normalizations, the solution family, extension reproduction, mean-value
//! consistency, convergence rates, the boundary-derivative limits, the
//! Riesz reproduction identity, and the Monte Carlo cross-oracle — and
//! returns a [`CheckResult`] with a verdict, a one-line summary, and the
//! measured quantities as JSON. Tolerances live here, next to the check
//! that uses them, so a verdict is reproducible from the source alone.
//!
//! Everything is deterministic: quadrature is bit-reproducible by
//! construction, Monte Carlo runs on fixed seeds, and grids are compile-time
//! constants, so two runs of the same binary produce identical results.

use crate::error::Error;
use crate::exec::par_map;
use crate::field::{DecayClass, ScalarField, Support};
use crate::fraclap::{
    frac_laplacian, mean_value_deviation, mv_convergence_study, mv_truncated_reference_study,
    pv_integral,
};
use crate::geom::{Ball, FracOrder, Point, SpaceDim};
use crate::halfspace::{
    extension_field, normal_limit_study, poisson_extend, riesz_identity_residual, tangent_ball,
    tangential_decay_study, verify_liouville_ode, LiouvilleSolution,
};
use crate::kernels::mean_value_kernel_parts;
use crate::mc_oracle::{mc_extend, RandomStream};
use crate::quadrature::adapt1d::adaptive;
use crate::quadrature::QuadratureSpec;
use crate::report::{CheckResult, SlopeEstimate};
use crate::special::sphere_area;
use crate::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

/// Dimensions covered by the grid checks.
const DIMS: [usize; 3] = [1, 2, 3];
/// Fractional orders covered by the grid checks: one strongly singular, the
/// midpoint, and one close to the local limit.
const ALPHAS: [f64; 3] = [0.3, 1.0, 1.7];
/// Radii witnessing scale invariance of the mean-value kernel mass.
const EPS_RADII: [f64; 5] = [0.0625, 0.25, 1.0, 4.0, 16.0];
/// Doubling exponents of the tangent-ball ladders, r = x_n · 2^k.
const LADDER_KS: [u32; 9] = [4, 5, 6, 7, 8, 9, 10, 11, 12];

/// Names of every check, in canonical execution order.
pub const CHECK_NAMES: [&str; 11] = [
    "kernel-mass",
    "liouville-pv",
    "extension-reproduction",
    "extension-mean-value",
    "gaussian-mv-rate",
    "tangential-limit",
    "normal-limit",
    "riesz-identity",
    "mc-cross-oracle",
    "fourier-oracle",
    "ode",
];

/// Run one check by name. `seed` offsets the stream seeds of the two
/// randomized checks (Riesz configurations and the Monte Carlo trials);
/// seed 0 reproduces the pinned validation configuration. Deterministic
/// checks ignore it.
pub fn run_check(name: &str, seed: u64) -> Result<CheckResult> {
    match name {
        "kernel-mass" => Ok(check_kernel_mass()),
        "liouville-pv" => Ok(check_liouville_pv()),
        "extension-reproduction" => Ok(check_extension_reproduction()),
        "extension-mean-value" => Ok(check_extension_mean_value()),
        "gaussian-mv-rate" => Ok(check_gaussian_mv_rate()),
        "tangential-limit" => Ok(check_tangential_limit()),
        "normal-limit" => Ok(check_normal_limit()),
        "riesz-identity" => Ok(check_riesz_identity(seed)),
        "mc-cross-oracle" => Ok(check_mc_cross_oracle(seed)),
        "fourier-oracle" => Ok(check_fourier_oracle()),
        "ode" => Ok(check_ode()),
        other => Err(Error::invalid(format!(
            "unknown check '{other}'; available: {}",
            CHECK_NAMES.join(", ")
        ))),
    }
}

/// Run a selection of checks (all of them when `filter` is empty). Unknown
/// names are rejected before any work starts.
pub fn run_suite(filter: &[String], seed: u64) -> Result<Vec<CheckResult>> {
    let selected: Vec<&str> = if filter.is_empty() {
        CHECK_NAMES.to_vec()
    } else {
        let mut names = Vec::with_capacity(filter.len());
        for f in filter {
            if !CHECK_NAMES.contains(&f.as_str()) {
                return Err(Error::invalid(format!(
                    "unknown check '{f}'; available: {}",
                    CHECK_NAMES.join(", ")
                )));
            }
            names.push(f.as_str());
        }
        names
    };
    selected.into_iter().map(|n| run_check(n, seed)).collect()
}

/// Convert an internal error into a failed check instead of aborting the
/// whole suite: a check that cannot produce its numbers has failed.
fn guard(name: &'static str, body: impl FnOnce() -> Result<CheckResult>) -> CheckResult {
    body().unwrap_or_else(|e| {
        CheckResult::new(
            name,
            false,
            format!("aborted: {e}"),
            json!({ "error": e.to_string() }),
        )
    })
}

fn fo(a: f64) -> FracOrder {
    FracOrder::new(a).expect("grid order is valid")
}

fn sdim(n: usize) -> SpaceDim {
    SpaceDim::new(n).expect("grid dimension is valid")
}

fn slope_json(s: &SlopeEstimate) -> serde_json::Value {
    serde_json::to_value(s).unwrap_or(serde_json::Value::Null)
}

/// Five interior evaluation points of a ball, spread over the radius and,
/// for n ≥ 2, off the symmetry axis.
fn interior_points(ball: &Ball) -> Result<Vec<Point>> {
    let n = ball.dim().n();
    let r = ball.radius();
    let offsets: Vec<Vec<f64>> = match n {
        1 => vec![vec![0.0], vec![0.4], vec![-0.45], vec![0.7], vec![-0.8]],
        2 => vec![
            vec![0.0, 0.0],
            vec![0.0, 0.4],
            vec![0.0, -0.45],
            vec![0.3, 0.0],
            vec![-0.35, 0.45],
        ],
        _ => vec![
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.4],
            vec![0.0, 0.0, -0.45],
            vec![0.3, 0.0, 0.0],
            vec![-0.2, 0.25, 0.35],
        ],
    };
    offsets
        .into_iter()
        .map(|off| {
            let p = Point::new(&off)?;
            Ok(ball.center().add_scaled(r, &p))
        })
        .collect()
}

/// Total mass of the exterior mean-value kernel ε_α^{(r)}, integrated
/// radially in the squared-gap variable v = (ρ/r)² − 1. The integrand is
/// built from the library kernel itself; the two integrable endpoint
/// singularities (v^{−α/2} at the sphere, v^{−1−α/2} at infinity, folded to
/// the origin by v ↦ 1/v) sit on graded seed panels. The identity ∫ε = 1
/// holds for every radius, so the returned value is a direct normalization
/// probe of the kernel implementation.
pub fn mean_value_mass(dim: SpaceDim, alpha: FracOrder, r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(format!(
            "kernel radius must be finite and positive, got {r}"
        )));
    }
    let n = dim.n();
    let area = sphere_area(dim);
    let radial = move |v: f64| {
        let rho = r * (1.0 + v).sqrt();
        let t = r * r * v;
        let drho_dv = r / (2.0 * (1.0 + v).sqrt());
        area * mean_value_kernel_parts(dim, alpha, r, t, rho)
            * rho.powi(n as i32 - 1)
            * drho_dv
    };
    let folded = move |w: f64| radial(1.0 / w) / (w * w);
    let seeds = [
        (0.0, 1.0 / 4096.0),
        (1.0 / 4096.0, 1.0 / 64.0),
        (1.0 / 64.0, 1.0),
    ];
    let near = adaptive(&radial, &seeds, 1e-10, 1e-13, 2_000_000);
    let far = adaptive(&folded, &seeds, 1e-10, 1e-13, 2_000_000);
    if !(near.converged && far.converged) {
        return Err(Error::ConvergenceFailure {
            partial: crate::quadrature::EvalResult {
                value: near.value + far.value,
                error_estimate: near.error + far.error,
                n_evals: near.n_evals + far.n_evals,
            },
            context: format!(
                "mean-value kernel mass (n = {n}, alpha = {}, r = {r})",
                f64::from(alpha)
            ),
        });
    }
    Ok(near.value + far.value)
}

/// Both kernel families have unit total mass: the Poisson kernel of a ball
/// integrates to one over the exterior (checked through the full extension
/// pipeline applied to the constant field, at five interior points), and the
/// exterior mean-value kernel integrates to one at every radius (checked
/// radially at five radii spanning three orders of magnitude).
pub fn check_kernel_mass() -> CheckResult {
    guard("kernel-mass", || {
        let tol = 1e-6;
        let spec = QuadratureSpec::new(1e-8, 1e-11, 20_000_000, 4.0)?;
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for &n in &DIMS {
            let dim = sdim(n);
            let one = ScalarField::constant(dim, 1.0)?;
            let ball = tangent_ball(dim, 1.0)?;
            let points = interior_points(&ball)?;
            for &a in &ALPHAS {
                let alpha = fo(a);
                let masses = par_map(points.len(), |i| {
                    poisson_extend(&one, &ball, &points[i], alpha, &spec).map(|e| e.value)
                });
                for (p, m) in points.iter().zip(masses) {
                    let m = m?;
                    worst = worst.max((m - 1.0).abs());
                    rows.push(json!({
                        "kernel": "poisson", "n": n, "alpha": a,
                        "x": p.as_slice(), "mass": m,
                    }));
                }
                let eps = par_map(EPS_RADII.len(), |i| mean_value_mass(dim, alpha, EPS_RADII[i]));
                for (&r, m) in EPS_RADII.iter().zip(eps) {
                    let m = m?;
                    worst = worst.max((m - 1.0).abs());
                    rows.push(json!({
                        "kernel": "mean-value", "n": n, "alpha": a,
                        "r": r, "mass": m,
                    }));
                }
            }
        }
        let pass = worst <= tol;
        Ok(CheckResult::new(
            "kernel-mass",
            pass,
            format!(
                "worst |mass - 1| = {worst:.3e} over {} kernel configurations (tolerance {tol:.0e})",
                rows.len()
            ),
            json!({ "tolerance": tol, "worst_abs_error": worst, "rows": rows }),
        ))
    })
}

/// The solution family C x_n^{α/2} is annihilated by the operator: the PV
/// integral vanishes at interior points of the half-space, relative to the
/// natural scale u(x) / x_n^α of the integrand.
pub fn check_liouville_pv() -> CheckResult {
    guard("liouville-pv", || {
        let tol = 1e-4;
        // The PV core's fixed-resolution angular averages leave an
        // irreducible absolute error floor near 2e-6 on this field (the
        // profile has a kink where spheres cross the boundary plane), and
        // the core's sub-stages each get 0.2 of the absolute tolerance, so
        // the spec must sit a decade above the floor. The measured |pv|
        // still lands at the floor itself, an order of magnitude or more
        // inside the acceptance bound on every grid point.
        let spec = QuadratureSpec::new(1e-5, 2e-5, 40_000_000, 4.0)?;
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for &n in &DIMS {
            let dim = sdim(n);
            let heights = [0.3, 0.7, 1.0, 1.9, 3.5];
            let lateral = [0.0, 0.5, -0.4, 0.8, 0.0];
            let points: Vec<Point> = heights
                .iter()
                .zip(lateral)
                .map(|(&h, l)| {
                    let mut coords = vec![0.0; n];
                    coords[n - 1] = h;
                    if n >= 2 {
                        coords[0] = l;
                    }
                    Point::new(&coords)
                })
                .collect::<Result<_>>()?;
            for &a in &ALPHAS {
                let alpha = fo(a);
                let sol = LiouvilleSolution::new(1.0, alpha, dim)?;
                let u = sol.field();
                let per = par_map(points.len(), |i| pv_integral(&u, &points[i], alpha, &spec));
                for (x, res) in points.iter().zip(per) {
                    let pv = res?.eval.value;
                    let scale = x.last().powf(-0.5 * a);
                    let ratio = pv.abs() / scale;
                    worst = worst.max(ratio);
                    rows.push(json!({
                        "n": n, "alpha": a, "x": x.as_slice(),
                        "pv": pv, "scale": scale, "scaled_abs": ratio,
                    }));
                }
            }
        }
        let pass = worst <= tol;
        Ok(CheckResult::new(
            "liouville-pv",
            pass,
            format!(
                "worst scaled |pv| = {worst:.3e} over {} interior points (tolerance {tol:.0e})",
                rows.len()
            ),
            json!({ "tolerance": tol, "worst_scaled_abs": worst, "rows": rows }),
        ))
    })
}

/// The Poisson extension reproduces an α-harmonic function: extending the
/// solution family from outside a tangent ball recovers its interior values.
pub fn check_extension_reproduction() -> CheckResult {
    guard("extension-reproduction", || {
        let tol = 1e-4;
        // The slowest grid point (n = 3, alpha = 0.3: a nearly full-measure
        // heavy tail) needs the full budget at this tolerance, which still
        // sits 10x below the acceptance threshold.
        let spec = QuadratureSpec::new(1e-5, 1e-7, 40_000_000, 4.0)?;
        let radii = [2.0, 8.0];
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for &n in &DIMS {
            let dim = sdim(n);
            let x = Point::axis(dim, n - 1, 1.0)?;
            for &a in &ALPHAS {
                let alpha = fo(a);
                let sol = LiouvilleSolution::new(1.0, alpha, dim)?;
                let u = sol.field();
                let exact = sol.eval_at(&x)?;
                let per = par_map(radii.len(), |i| -> Result<f64> {
                    let ball = tangent_ball(dim, radii[i])?;
                    Ok(poisson_extend(&u, &ball, &x, alpha, &spec)?.value)
                });
                for (&r, res) in radii.iter().zip(per) {
                    let got = res?;
                    let rel = (got - exact).abs() / exact.abs();
                    worst = worst.max(rel);
                    rows.push(json!({
                        "n": n, "alpha": a, "r": r,
                        "extension": got, "exact": exact, "rel_error": rel,
                    }));
                }
            }
        }
        let pass = worst <= tol;
        Ok(CheckResult::new(
            "extension-reproduction",
            pass,
            format!(
                "worst relative error = {worst:.3e} over {} (n, alpha, r) configurations (tolerance {tol:.0e})",
                rows.len()
            ),
            json!({ "tolerance": tol, "worst_rel_error": worst, "rows": rows }),
        ))
    })
}

/// Half-space data that is not α-harmonic (a modulated power profile), whose
/// extension into a tangent ball must nevertheless be α-harmonic there: the
/// mean-value deviation of the extension, evaluated by the full nested
/// quadrature, vanishes at the ball center for both test radii.
fn modulated_profile(n: usize, a: f64) -> Result<ScalarField> {
    let dim = sdim(n);
    ScalarField::new(
        dim,
        Support::UpperHalfSpace,
        DecayClass::new(0.5 * a, 1.5)?,
        move |y: &Point| y.last() > 0.0,
        move |y: &Point| {
            let yn = y.last().max(0.0);
            let mut q = (yn - 1.3) * (yn - 1.3);
            for i in 0..y.dim().n() - 1 {
                q += y.coord(i) * y.coord(i);
            }
            yn.powf(0.5 * a) * (1.0 + 0.5 * (-q).exp())
        },
    )
}

pub fn check_extension_mean_value() -> CheckResult {
    guard("extension-mean-value", || {
        let tol = 1e-3;
        let deltas = [0.125, 0.0625];
        // (n, alpha, inner extension quadrature, outer deviation quadrature).
        // The inner tolerance is looser in n = 2 where each extension
        // evaluation is a full two-dimensional exterior integral; its cost
        // is multiplied by every outer node.
        let cases: Vec<(usize, f64, QuadratureSpec, QuadratureSpec)> = vec![
            (
                1,
                0.3,
                QuadratureSpec::new(1e-5, 1e-8, 200_000, 4.0)?,
                QuadratureSpec::new(1e-4, 1e-4, 2_000_000, 4.0)?,
            ),
            (
                1,
                1.0,
                QuadratureSpec::new(1e-5, 1e-8, 200_000, 4.0)?,
                QuadratureSpec::new(1e-4, 1e-4, 2_000_000, 4.0)?,
            ),
            (
                1,
                1.7,
                QuadratureSpec::new(1e-5, 1e-8, 200_000, 4.0)?,
                QuadratureSpec::new(1e-4, 1e-4, 2_000_000, 4.0)?,
            ),
            (
                2,
                1.0,
                QuadratureSpec::new(3e-4, 1e-6, 100_000, 4.0)?,
                QuadratureSpec::new(1e-4, 5e-4, 2_000_000, 4.0)?,
            ),
        ];
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for (n, a, inner, outer) in cases {
            let dim = sdim(n);
            let alpha = fo(a);
            let ball = tangent_ball(dim, 1.0)?;
            let x = Point::axis(dim, n - 1, 1.0)?;
            let w = modulated_profile(n, a)?;
            let uhat = extension_field(&w, &ball, alpha, &inner)?;
            for &delta in &deltas {
                let out = mean_value_deviation(&uhat, &x, alpha, delta, &outer)?;
                let dev = out.eval.value.abs();
                worst = worst.max(dev);
                rows.push(json!({
                    "n": n, "alpha": a, "delta": delta,
                    "deviation": out.eval.value,
                    "error_estimate": out.eval.error_estimate,
                }));
            }
        }
        let pass = worst <= tol;
        Ok(CheckResult::new(
            "extension-mean-value",
            pass,
            format!(
                "worst |mean-value deviation| = {worst:.3e} over {} (n, alpha, delta) configurations (tolerance {tol:.0e})",
                rows.len()
            ),
            json!({ "tolerance": tol, "worst_abs_deviation": worst, "rows": rows }),
        ))
    })
}

/// Mean-value deviations of a smooth non-harmonic field converge as the
/// radius shrinks. Against the radius-matched truncated reference the
/// kernel-swap gap vanishes at the sharp rate 2 − α (two-sided check);
/// against the full limit the deviation converges at the generic quadratic
/// rate, which satisfies the same lower bound (one-sided check).
pub fn check_gaussian_mv_rate() -> CheckResult {
    guard("gaussian-mv-rate", || {
        let band = 0.15;
        let alphas = [0.5, 1.0, 1.5];
        let radii: Vec<f64> = (3..=8).map(|k| 0.5f64.powi(k)).collect();
        let spec = QuadratureSpec::new(1e-6, 1e-9, 10_000_000, 4.0)?;
        let dim = sdim(1);
        let u = ScalarField::gaussian(dim)?;
        let x = Point::zero(dim);
        let mut rows = Vec::new();
        let mut pass = true;
        for &a in &alphas {
            let alpha = fo(a);
            let want = 2.0 - a;
            let sharp = mv_truncated_reference_study(&u, &x, alpha, &radii, &spec)?;
            let sharp_ok = match &sharp.slope {
                SlopeEstimate::Fitted { slope, .. } => (slope - want).abs() <= band,
                SlopeEstimate::Degenerate { .. } => false,
            };
            let full = mv_convergence_study(&u, &x, alpha, &radii, &spec)?;
            let full_ok = match &full.slope {
                SlopeEstimate::Fitted { slope, .. } => *slope >= want - band,
                // Deviations below the quadrature noise floor converge
                // faster than any measurable rate.
                SlopeEstimate::Degenerate { .. } => true,
            };
            pass = pass && sharp_ok && full_ok;
            rows.push(json!({
                "alpha": a, "expected_rate": want,
                "truncated_reference_slope": slope_json(&sharp.slope),
                "full_limit_slope": slope_json(&full.slope),
                "sharp_ok": sharp_ok, "full_ok": full_ok,
            }));
        }
        Ok(CheckResult::new(
            "gaussian-mv-rate",
            pass,
            format!(
                "kernel-swap rate matches 2 - alpha within {band} for alpha in {alphas:?} (n = 1 Gaussian)"
            ),
            json!({ "band": band, "radii": radii, "rows": rows }),
        ))
    })
}

/// Tangential derivatives of the extension vanish identically for the
/// solution family, at every ladder radius: the boundary and bulk terms of
/// the decomposition cancel exactly. The total is statistically zero (or,
/// if it resolves above the noise floor, decays at least at the rate
/// α/2 − 1), the boundary term decays like 1/r, and the far-field bulk
/// complement decays at least at the rate α/2 − 1.
pub fn check_tangential_limit() -> CheckResult {
    guard("tangential-limit", || {
        let slack = 0.2;
        // The exterior-ray integrals for the off-axis point stall near an
        // absolute error of 3e-9 within budget; an absolute target of 2e-8
        // clears that stall while staying two decades below the smallest
        // fitted row (the boundary term at the largest radius, ~8e-6).
        let spec = QuadratureSpec::new(1e-6, 2e-8, 20_000_000, 4.0)?;
        let dim = sdim(2);
        let x = Point::new(&[0.5, 1.0])?;
        let far = 10.0 * x.norm();
        let mut rows = Vec::new();
        let mut pass = true;
        for &a in &ALPHAS {
            let alpha = fo(a);
            let sol = LiouvilleSolution::new(1.0, alpha, dim)?;
            let st = tangential_decay_study(&sol, &x, 0, &LADDER_KS, far, &spec)?;
            let bound = 0.5 * a - 1.0 + slack;
            let total_ok = match &st.total.slope {
                SlopeEstimate::Degenerate { .. } => true,
                SlopeEstimate::Fitted { slope, .. } => *slope <= bound,
            };
            let boundary_ok = match &st.boundary.slope {
                SlopeEstimate::Fitted { slope, .. } => *slope <= -1.0 + 0.1,
                SlopeEstimate::Degenerate { .. } => true,
            };
            let bulk_ok = match &st.bulk_far.slope {
                SlopeEstimate::Fitted { slope, .. } => *slope <= bound,
                SlopeEstimate::Degenerate { .. } => true,
            };
            pass = pass && total_ok && boundary_ok && bulk_ok;
            let totals: Vec<serde_json::Value> = st
                .total
                .rows
                .iter()
                .map(|r| json!([r.parameter, r.value]))
                .collect();
            rows.push(json!({
                "alpha": a, "rate_bound": bound,
                "total_slope": slope_json(&st.total.slope),
                "boundary_slope": slope_json(&st.boundary.slope),
                "bulk_far_slope": slope_json(&st.bulk_far.slope),
                "total_rows": totals,
                "total_ok": total_ok, "boundary_ok": boundary_ok, "bulk_far_ok": bulk_ok,
            }));
        }
        Ok(CheckResult::new(
            "tangential-limit",
            pass,
            format!(
                "tangential totals vanish over r = x_n * 2^{{4..12}} for alpha in {ALPHAS:?} (n = 2), pieces decay at their rates"
            ),
            json!({ "x": x.as_slice(), "far_radius": far, "rows": rows }),
        ))
    })
}

/// The normal derivative of the extension converges to the radial equation
/// value (α / 2x_n) u(x) as the tangent ball grows: the total matches the
/// limit at every radius within quadrature noise (for this family the bulk
/// term cancels the boundary deficit exactly), the boundary term approaches
/// the limit at rate 1/r, and the largest-radius total matches to 10⁻³.
pub fn check_normal_limit() -> CheckResult {
    guard("normal-limit", || {
        let rate_band = 0.2;
        let match_tol = 1e-3;
        let spec = QuadratureSpec::new(1e-6, 3e-9, 20_000_000, 4.0)?;
        let configs: Vec<(usize, Vec<f64>)> = vec![(1, vec![1.0]), (2, vec![0.5, 1.0])];
        let mut rows = Vec::new();
        let mut pass = true;
        for (n, coords) in configs {
            let dim = sdim(n);
            let x = Point::new(&coords)?;
            for &a in &ALPHAS {
                let alpha = fo(a);
                let sol = LiouvilleSolution::new(1.0, alpha, dim)?;
                let st = normal_limit_study(&sol, &x, &LADDER_KS, &spec)?;
                let last = st
                    .total
                    .rows
                    .last()
                    .ok_or_else(|| Error::invalid("normal-limit study returned no rows"))?;
                let rel_mismatch = (last.value - last.reference).abs() / last.reference.abs();
                let match_ok = rel_mismatch <= match_tol;
                let boundary_ok = match &st.boundary.slope {
                    SlopeEstimate::Fitted { slope, .. } => (slope + 1.0).abs() <= rate_band,
                    SlopeEstimate::Degenerate { .. } => false,
                };
                let total_ok = match &st.total.slope {
                    SlopeEstimate::Degenerate { .. } => true,
                    SlopeEstimate::Fitted { slope, .. } => (slope + 1.0).abs() <= rate_band,
                };
                pass = pass && match_ok && boundary_ok && total_ok;
                rows.push(json!({
                    "n": n, "alpha": a, "x": x.as_slice(),
                    "reference": last.reference,
                    "largest_r": last.parameter,
                    "largest_r_total": last.value,
                    "rel_mismatch": rel_mismatch,
                    "total_slope": slope_json(&st.total.slope),
                    "boundary_slope": slope_json(&st.boundary.slope),
                    "match_ok": match_ok, "boundary_ok": boundary_ok, "total_ok": total_ok,
                }));
            }
        }
        Ok(CheckResult::new(
            "normal-limit",
            pass,
            format!(
                "normal derivative approaches (alpha / 2 x_n) u(x) at rate -1 +- {rate_band}, largest-radius match within {match_tol:.0e}"
            ),
            json!({ "rate_band": rate_band, "match_tolerance": match_tol, "rows": rows }),
        ))
    })
}

/// The Poisson kernel is reproduced by averaging the Riesz kernel over the
/// exit law: for seeded random interior points x and exterior points z the
/// residual of the reproduction identity vanishes to quadrature accuracy.
pub fn check_riesz_identity(seed: u64) -> CheckResult {
    guard("riesz-identity", || {
        let tol = 1e-4;
        let spec = QuadratureSpec::new(1e-7, 1e-10, 20_000_000, 4.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(8u64.wrapping_add(seed));
        let mut configs: Vec<(usize, f64, Point, Point)> = Vec::new();
        for &n in &[2usize, 3] {
            for &a in &ALPHAS {
                for _ in 0..10 {
                    let x = Point::new(&ball_vector(&mut rng, n, 0.55))?;
                    let dir = unit_vector(&mut rng, n);
                    let s = 1.5 + 2.5 * rng.gen::<f64>();
                    let z = Point::new(&dir.iter().map(|d| d * s).collect::<Vec<f64>>())?;
                    configs.push((n, a, x, z));
                }
            }
        }
        let per = par_map(configs.len(), |i| -> Result<f64> {
            let (n, a, x, z) = &configs[i];
            let ball = Ball::new(Point::zero(sdim(*n)), 1.0)?;
            riesz_identity_residual(&ball, x, z, fo(*a), &spec)
        });
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for ((n, a, x, z), res) in configs.iter().zip(per) {
            let residual = res?;
            worst = worst.max(residual);
            rows.push(json!({
                "n": n, "alpha": a,
                "x": x.as_slice(), "z": z.as_slice(),
                "residual": residual,
            }));
        }
        let pass = worst <= tol;
        Ok(CheckResult::new(
            "riesz-identity",
            pass,
            format!(
                "worst reproduction residual = {worst:.3e} over {} seeded configurations (tolerance {tol:.0e})",
                rows.len()
            ),
            json!({ "tolerance": tol, "worst_residual": worst, "rows": rows }),
        ))
    })
}

/// Uniform draw from the ball of radius `scale` (coordinates as a plain
/// vector; rejection from the enclosing cube).
fn ball_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        let norm_sq: f64 = v.iter().map(|c| c * c).sum();
        if norm_sq <= 1.0 {
            return v.iter().map(|c| c * scale).collect();
        }
    }
}

/// Uniform direction (rejection from the cube, normalized; the tiny-norm
/// region is excluded to keep the normalization stable).
fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
        let norm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.1 && norm <= 1.0 {
            return v.iter().map(|c| c / norm).collect();
        }
    }
}

/// Bounded, visibly non-harmonic half-space data for the cross-oracle.
fn bounded_bump(dim: SpaceDim) -> Result<ScalarField> {
    ScalarField::new(
        dim,
        Support::UpperHalfSpace,
        DecayClass::new(0.0, 2.0)?,
        |y: &Point| y.last() > 0.0,
        |y: &Point| {
            if y.last() <= 0.0 {
                return 0.0;
            }
            let n = y.dim().n();
            let mut q = (y.last() - 1.5) * (y.last() - 1.5);
            if n >= 2 {
                let c0 = y.coord(0) - 0.5;
                q += c0 * c0;
            }
            for i in 1..n.saturating_sub(1) {
                q += y.coord(i) * y.coord(i);
            }
            let yn = y.last();
            1.0 / (1.0 + q) + 0.4 * yn / (1.0 + yn * yn)
        },
    )
}

/// The Monte Carlo exit-law estimator agrees with deterministic quadrature:
/// over 100 independent seeded streams of 10⁵ exit samples each, at least
/// 95 estimates land within three standard errors of the quadrature value
/// of the extension.
pub fn check_mc_cross_oracle(seed: u64) -> CheckResult {
    guard("mc-cross-oracle", || {
        let trials = 100u64;
        let samples = 100_000u64;
        let need = 95u32;
        let dim = sdim(2);
        let alpha = fo(1.0);
        let u = bounded_bump(dim)?;
        let ball = tangent_ball(dim, 2.0)?;
        let x = Point::new(&[0.0, 1.0])?;
        let spec = QuadratureSpec::new(1e-7, 1e-10, 5_000_000, 4.0)?;
        let reference = poisson_extend(&u, &ball, &x, alpha, &spec)?.value;
        let stream_seed = 907u64.wrapping_add(seed);
        let per = par_map(trials as usize, |id| {
            mc_extend(&u, &ball, &x, alpha, samples, &RandomStream::new(stream_seed, id as u64))
        });
        let mut covered = 0u32;
        let mut means = Vec::with_capacity(trials as usize);
        for res in per {
            let est = res?;
            if (est.mean - reference).abs() <= 3.0 * est.std_error {
                covered += 1;
            }
            means.push(json!([est.mean, est.std_error]));
        }
        let pass = covered >= need;
        Ok(CheckResult::new(
            "mc-cross-oracle",
            pass,
            format!(
                "{covered}/{trials} three-sigma intervals cover the quadrature value {reference:.6} (need >= {need})"
            ),
            json!({
                "reference": reference, "covered": covered,
                "trials": trials, "samples_per_trial": samples,
                "estimates": means,
            }),
        ))
    })
}

/// The operator evaluated on a Gaussian matches the closed-form spectral
/// value 2^α Γ((α+1)/2) / Γ(1/2) at the origin (n = 1), computed once from
/// the symbol and pinned here to full precision.
pub fn check_fourier_oracle() -> CheckResult {
    guard("fourier-oracle", || {
        let tol = 1e-4;
        let references = [
            (0.5, 0.977_741_067_446_923_8),
            (1.0, 1.128_379_167_095_512_6),
            (1.5, 1.446_409_084_632_077_1),
        ];
        let spec = QuadratureSpec::new(1e-6, 1e-9, 10_000_000, 4.0)?;
        let dim = sdim(1);
        let u = ScalarField::gaussian(dim)?;
        let x = Point::zero(dim);
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for &(a, want) in &references {
            let got = frac_laplacian(&u, &x, fo(a), &spec)?.eval.value;
            let rel = (got - want).abs() / want;
            worst = worst.max(rel);
            rows.push(json!({
                "alpha": a, "value": got, "reference": want, "rel_error": rel,
            }));
        }
        let pass = worst <= tol;
        Ok(CheckResult::new(
            "fourier-oracle",
            pass,
            format!(
                "worst relative error vs spectral values = {worst:.3e} (tolerance {tol:.0e})"
            ),
            json!({ "tolerance": tol, "worst_rel_error": worst, "rows": rows }),
        ))
    })
}

/// The profile of the solution family satisfies its radial equation
/// u'(x_n) = (α / 2x_n) u(x_n) in closed form; residuals are pure rounding.
pub fn check_ode() -> CheckResult {
    guard("ode", || {
        let grid = [(0.7, 0.25), (1.0, 0.5), (2.3, 1.0), (1.0, 2.0), (0.7, 4.0)];
        let mut rows = Vec::new();
        let mut pass = true;
        for &n in &DIMS {
            let dim = sdim(n);
            for &a in &ALPHAS {
                for &(c, xn) in &grid {
                    let sol = LiouvilleSolution::new(c, fo(a), dim)?;
                    let x = Point::axis(dim, n - 1, xn)?;
                    let res = verify_liouville_ode(&sol, &x)?;
                    let scale = 1.0 + (0.5 * a * c * xn.powf(0.5 * a - 1.0)).abs();
                    let ok = res.abs() <= 1e-13 * scale;
                    pass = pass && ok;
                    rows.push(json!({
                        "n": n, "alpha": a, "c": c, "x_n": xn, "residual": res,
                    }));
                }
            }
        }
        Ok(CheckResult::new(
            "ode",
            pass,
            format!(
                "radial-equation residuals are at rounding level over {} configurations",
                rows.len()
            ),
            json!({ "rows": rows }),
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_checks_are_rejected_before_running() {
        assert!(run_check("no-such-check", 0).is_err());
        let filter = vec!["ode".to_string(), "bogus".to_string()];
        assert!(run_suite(&filter, 0).is_err());
    }

    #[test]
    fn ode_check_passes_and_serializes() {
        let out = check_ode();
        assert!(out.pass, "{}", out.detail);
        let text = serde_json::to_string(&out).unwrap();
        assert!(text.contains("\"name\":\"ode\""));
    }

    #[test]
    fn suite_respects_the_filter_order() {
        let filter = vec!["ode".to_string()];
        let results = run_suite(&filter, 0).unwrap();
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].name, "ode");
    }

    #[test]
    fn mean_value_mass_is_one_at_odd_radius() {
        let m = mean_value_mass(sdim(2), fo(0.7), 3.7).unwrap();
        assert!((m - 1.0).abs() < 1e-8, "mass {m}");
    }
}
