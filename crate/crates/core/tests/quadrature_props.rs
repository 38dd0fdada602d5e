//! Engine-level contracts for the exterior integrator, checked against
//! closed forms: the family ∫_{|y|>r} (|y|²−r²)^{−β} |y|^{−n−s} dy equals
//! area(Sⁿ⁻¹) · r^{−2β−s}/2 · B(1−β, s/2+β), which covers both the plain
//! power-law tails (β = 0) and integrands with an edge singularity.

use fracharm::field::DecayClass;
use fracharm::geom::{Ball, Point, SpaceDim};
use fracharm::quadrature::{integrate_exterior, ExteriorIntegrand, QuadratureSpec};
use fracharm::special::{gamma, sphere_area};

fn dim(n: usize) -> SpaceDim {
    SpaceDim::new(n).unwrap()
}

fn closed_form(n: usize, beta: f64, s: f64, r: f64) -> f64 {
    let b = gamma(1.0 - beta) * gamma(0.5 * s + beta) / gamma(1.0 + 0.5 * s);
    0.5 * sphere_area(dim(n)) * r.powf(-2.0 * beta - s) * b
}

/// Integrate t^{−β} ρ^{−n−s} over the exterior of the centered ball of
/// radius r and return (value, error_estimate, closed form).
fn run_case(n: usize, beta: f64, s: f64, r: f64, spec: &QuadratureSpec) -> (f64, f64, f64) {
    let d = dim(n);
    let ball = Ball::new(Point::zero(d), r).unwrap();
    let nf = n as f64;
    let eval = move |_y: &Point, rho: f64, t: f64| t.powf(-beta) * rho.powf(-nf - s);
    // The decay bound only steers tail truncation, so it needs to hold for
    // large ρ, not at the edge: for ρ ≥ 1.5 r, t ≥ (5/9) ρ² gives
    // t^{−β} ρ^{−n−s} ≤ 1.8^β ρ^{−n−s−2β}, converted to a (1+ρ)-power bound.
    let e = -nf - s - 2.0 * beta;
    let m = 1.8f64.powf(beta) * ((1.0 + 1.5 * r) / (1.5 * r)).powf(nf + s + 2.0 * beta);
    let decay = DecayClass::new(e, m).unwrap();
    let f = ExteriorIntegrand::new(&eval, beta, decay);
    let out = integrate_exterior(&f, &ball, spec).unwrap();
    (out.value, out.error_estimate, closed_form(n, beta, s, r))
}

#[test]
fn error_estimates_are_honest_on_closed_forms() {
    let spec = QuadratureSpec::new(1e-7, 1e-12, 4_000_000, 4.0).unwrap();
    let mut total = 0;
    let mut honest = 0;
    for &n in &[1usize, 2, 3] {
        for &beta in &[0.0, 0.15, 0.5, 0.85] {
            for &(s, r) in &[(0.4, 1.0), (1.0, 0.5), (2.3, 2.0)] {
                let (value, estimate, oracle) = run_case(n, beta, s, r, &spec);
                total += 1;
                // Two estimates of slack, plus a rounding floor for the
                // closed form itself.
                if (value - oracle).abs() <= 2.0 * estimate + 1e-14 * oracle.abs() {
                    honest += 1;
                }
            }
        }
    }
    // At least 95% of the grid must be covered by twice the estimate.
    assert!(
        honest * 100 >= total * 95,
        "error estimate honest on only {honest} of {total} closed-form cases"
    );
}

#[test]
fn tightening_rel_tol_never_worsens_the_achieved_error() {
    for &(n, beta, s, r) in &[
        (1usize, 0.5, 0.7, 1.0),
        (2, 0.0, 1.3, 0.5),
        (2, 0.3, 0.6, 2.0),
        (3, 0.15, 1.9, 1.0),
    ] {
        let mut prev = f64::INFINITY;
        for &rel in &[1e-3, 5e-4, 2.5e-4, 1.25e-4, 6.25e-5] {
            let spec = QuadratureSpec::new(rel, 1e-13, 4_000_000, 4.0).unwrap();
            let (value, _, oracle) = run_case(n, beta, s, r, &spec);
            let err = (value - oracle).abs();
            assert!(
                err <= prev * (1.0 + 1e-12) + 1e-15 * oracle.abs(),
                "achieved error rose from {prev:.3e} to {err:.3e} at rel_tol {rel} \
                 (n={n}, beta={beta}, s={s}, r={r})"
            );
            prev = err;
        }
    }
}

#[test]
fn exterior_integration_is_linear() {
    let d = dim(2);
    let ball = Ball::new(Point::zero(d), 1.0).unwrap();
    let f = move |_y: &Point, rho: f64, t: f64| t.powf(-0.3) * rho.powf(-2.8);
    let g = move |_y: &Point, rho: f64, _t: f64| rho.powf(-4.0);
    let combo = move |y: &Point, rho: f64, t: f64| 1.5 * f(y, rho, t) - 0.4 * g(y, rho, t);
    let mf = 1.8f64.powf(0.3) * (5.0f64 / 3.0).powf(3.4);
    let mg = (5.0f64 / 3.0).powf(4.0);
    let df = DecayClass::new(-3.4, mf).unwrap();
    let dg = DecayClass::new(-4.0, mg).unwrap();
    // The combination decays no faster than its slower part.
    let dc = DecayClass::new(-3.4, 1.5 * mf + 0.4 * mg).unwrap();
    let spec = QuadratureSpec::new(1e-8, 1e-12, 4_000_000, 4.0).unwrap();
    let rf = integrate_exterior(&ExteriorIntegrand::new(&f, 0.3, df), &ball, &spec).unwrap();
    let rg = integrate_exterior(&ExteriorIntegrand::new(&g, 0.0, dg), &ball, &spec).unwrap();
    let rc = integrate_exterior(&ExteriorIntegrand::new(&combo, 0.3, dc), &ball, &spec).unwrap();
    let gap = (rc.value - (1.5 * rf.value - 0.4 * rg.value)).abs();
    let budget = rc.error_estimate + 1.5 * rf.error_estimate + 0.4 * rg.error_estimate;
    assert!(
        gap <= budget + 1e-13,
        "linearity gap {gap:.3e} exceeds combined error budget {budget:.3e}"
    );
}

#[test]
fn closed_form_values_are_reproduced() {
    // Spot-check absolute accuracy, not just self-consistency: the β = 0
    // column is the elementary tail mass area(Sⁿ⁻¹) r^{−s}/s.
    let spec = QuadratureSpec::new(1e-10, 1e-13, 4_000_000, 4.0).unwrap();
    for &n in &[1usize, 2, 3] {
        for &(s, r) in &[(0.4, 1.0), (2.3, 2.0)] {
            let (value, _, _) = run_case(n, 0.0, s, r, &spec);
            let elementary = sphere_area(dim(n)) * r.powf(-s) / s;
            let rel = (value - elementary).abs() / elementary;
            assert!(
                rel <= 1e-9,
                "tail mass off by rel {rel:.3e} for n={n}, s={s}, r={r}"
            );
        }
    }
}
