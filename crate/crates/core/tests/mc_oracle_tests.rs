//! Exit-law sampler against closed forms and the quadrature path.

use fracharm::field::{DecayClass, ScalarField, Support};
use fracharm::geom::{Ball, FracOrder, Point, SpaceDim};
use fracharm::halfspace::{poisson_extend, tangent_ball, LiouvilleSolution};
use fracharm::mc_oracle::{mc_extend, sample_exit, RandomStream};
use fracharm::quadrature::adapt1d::adaptive;
use fracharm::quadrature::QuadratureSpec;
use fracharm::Error;

fn unit_ball(n: usize) -> Ball {
    let dim = SpaceDim::new(n).unwrap();
    Ball::new(Point::zero(dim), 1.0).unwrap()
}

/// Exit-law mass of { (ρ/r)² − 1 > T } for a walk started at the center.
/// The squared-radius marginal is sin(πα/2)/π · t^{−α/2}(1+t)^{−1} in any
/// dimension; substituting v = 1/t moves the singularity to the origin where
/// graded panels handle it.
fn center_tail_mass(alpha: f64, t_min: f64) -> f64 {
    let h = 1.0 / t_min;
    let g = move |v: f64| v.powf(0.5 * alpha - 1.0) / (1.0 + v);
    let seeds = [(0.0, h / 64.0), (h / 64.0, h / 8.0), (h / 8.0, h)];
    let out = adaptive(&g, &seeds, 1e-10, 1e-13, 500_000);
    assert!(out.converged, "tail-mass oracle did not converge");
    (0.5 * std::f64::consts::PI * alpha).sin() / std::f64::consts::PI * out.value
}

#[test]
fn every_sample_lands_outside_the_ball() {
    for (n, alpha, off) in [(1, 0.6, 0.4), (2, 1.0, 0.0), (3, 1.5, -0.7)] {
        let ball = unit_ball(n);
        let dim = ball.dim();
        let alpha = FracOrder::new(alpha).unwrap();
        let x = Point::axis(dim, 0, off).unwrap();
        let mut stream = RandomStream::new(42, 0);
        for _ in 0..2000 {
            let y = sample_exit(&ball, &x, alpha, &mut stream).unwrap();
            assert!(y.norm() > 1.0, "sample {:?} inside the ball", y.as_slice());
        }
    }
}

#[test]
fn sampler_rejects_exterior_start() {
    let ball = unit_ball(2);
    let x = Point::axis(ball.dim(), 0, 1.0).unwrap();
    let mut stream = RandomStream::new(1, 0);
    let alpha = FracOrder::new(1.0).unwrap();
    assert!(matches!(
        sample_exit(&ball, &x, alpha, &mut stream),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn angular_distribution_is_uniform_from_the_center() {
    // 24 sectors, 10⁵ draws; the statistic is chi-square with 23 degrees of
    // freedom, whose 0.99 quantile is 41.638 (p > 0.01 test).
    let ball = unit_ball(2);
    let x = Point::zero(ball.dim());
    let alpha = FracOrder::new(1.2).unwrap();
    let mut stream = RandomStream::new(2024, 5);
    let n_draws = 100_000usize;
    let mut counts = [0u32; 24];
    for _ in 0..n_draws {
        let y = sample_exit(&ball, &x, alpha, &mut stream).unwrap();
        let angle = y.coord(1).atan2(y.coord(0)) + std::f64::consts::PI;
        let sector = ((angle / std::f64::consts::TAU) * 24.0) as usize;
        counts[sector.min(23)] += 1;
    }
    let expected = n_draws as f64 / 24.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    assert!(chi2 < 41.638, "chi-square statistic {chi2} over 24 sectors");
}

#[test]
fn radial_tail_mass_matches_the_quadrature_oracle() {
    // Mass beyond twice the radius, i.e. t = (ρ/r)² − 1 > 3. At α = 1 the
    // closed form is exactly 1/3, a cross-check on the oracle itself.
    assert!((center_tail_mass(1.0, 3.0) - 1.0 / 3.0).abs() < 1e-9);

    let n_draws = 100_000usize;
    for (alpha, seed) in [(0.5, 7u64), (1.0, 8), (1.7, 9)] {
        let reference = center_tail_mass(alpha, 3.0);
        let ball = unit_ball(2);
        let x = Point::zero(ball.dim());
        let order = FracOrder::new(alpha).unwrap();
        let mut stream = RandomStream::new(seed, 0);
        let mut hits = 0usize;
        for _ in 0..n_draws {
            let y = sample_exit(&ball, &x, order, &mut stream).unwrap();
            if y.norm() > 2.0 {
                hits += 1;
            }
        }
        let share = hits as f64 / n_draws as f64;
        let sigma = (reference * (1.0 - reference) / n_draws as f64).sqrt();
        assert!(
            (share - reference).abs() <= 3.0 * sigma,
            "alpha {alpha}: empirical tail share {share} vs {reference} (3 sigma = {})",
            3.0 * sigma
        );
    }
}

#[test]
fn constant_field_is_estimated_exactly() {
    let dim = SpaceDim::new(2).unwrap();
    let u = ScalarField::constant(dim, 1.0).unwrap();
    let ball = unit_ball(2);
    let x = Point::axis(dim, 1, 0.3).unwrap();
    let alpha = FracOrder::new(0.9).unwrap();
    let stream = RandomStream::new(3, 0);
    let est = mc_extend(&u, &ball, &x, alpha, 10_000, &stream).unwrap();
    assert_eq!(est.mean, 1.0);
    assert_eq!(est.std_error, 0.0);
    assert_eq!(est.n_samples, 10_000);
}

/// Bounded, visibly non-harmonic half-space data for cross-oracle checks.
fn bounded_bump(dim: SpaceDim) -> ScalarField {
    ScalarField::new(
        dim,
        Support::UpperHalfSpace,
        DecayClass::new(0.0, 2.0).unwrap(),
        |y| y.last() > 0.0,
        |y| {
            if y.last() <= 0.0 {
                return 0.0;
            }
            let mut d2 = 0.0;
            for i in 0..y.dim().n() {
                let target = if i + 1 == y.dim().n() { 1.5 } else { 0.5 };
                d2 += (y.coord(i) - target).powi(2);
            }
            1.0 / (1.0 + d2) + 0.4 * y.last() / (1.0 + y.last() * y.last())
        },
    )
    .unwrap()
}

#[test]
fn sample_mean_matches_quadrature_for_bounded_data() {
    let dim = SpaceDim::new(2).unwrap();
    let alpha = FracOrder::new(1.0).unwrap();
    let u = bounded_bump(dim);
    let ball = tangent_ball(dim, 2.0).unwrap();
    let x = Point::new(&[0.0, 1.0]).unwrap();
    let spec = QuadratureSpec::new(1e-7, 1e-10, 5_000_000, 4.0).unwrap();
    let reference = poisson_extend(&u, &ball, &x, alpha, &spec).unwrap().value;
    let est = mc_extend(&u, &ball, &x, alpha, 100_000, &RandomStream::new(17, 2)).unwrap();
    assert!(
        (est.mean - reference).abs() <= 3.0 * est.std_error,
        "MC {} +- {} vs quadrature {reference}",
        est.mean,
        est.std_error
    );
}

#[test]
fn liouville_draws_match_quadrature_despite_heavy_tails() {
    // The profile x_n^{α/2} sits exactly on the second-moment boundary of
    // the exit law (the integrand decays like 1/ρ), so mc_extend refuses it;
    // raw draws still average to the quadrature value, checked here with the
    // sample-based error bar.
    let dim = SpaceDim::new(2).unwrap();
    let alpha = FracOrder::new(1.0).unwrap();
    let sol = LiouvilleSolution::new(1.0, alpha, dim).unwrap();
    let u = sol.field();
    let ball = tangent_ball(dim, 2.0).unwrap();
    let x = Point::new(&[0.0, 1.0]).unwrap();

    let spec = QuadratureSpec::new(1e-8, 1e-11, 5_000_000, 4.0).unwrap();
    let reference = poisson_extend(&u, &ball, &x, alpha, &spec).unwrap().value;
    assert!((reference - 1.0).abs() < 1e-6, "extension of the profile is the profile");

    let n_draws = 100_000usize;
    let mut stream = RandomStream::new(23, 1);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_draws {
        let y = sample_exit(&ball, &x, alpha, &mut stream).unwrap();
        let v = u.eval(&y);
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / n_draws as f64;
    let var = (sum_sq - n_draws as f64 * mean * mean) / (n_draws as f64 - 1.0);
    let se = (var / n_draws as f64).sqrt();
    assert!(
        (mean - reference).abs() <= 3.0 * se,
        "raw-draw mean {mean} +- {se} vs quadrature {reference}"
    );
}

#[test]
fn mc_extend_rejects_fields_without_second_moment() {
    let dim = SpaceDim::new(2).unwrap();
    let alpha = FracOrder::new(1.0).unwrap();
    let u = LiouvilleSolution::new(1.0, alpha, dim).unwrap().field();
    let ball = tangent_ball(dim, 2.0).unwrap();
    let x = Point::new(&[0.0, 1.0]).unwrap();
    let err = mc_extend(&u, &ball, &x, alpha, 1000, &RandomStream::new(0, 0));
    assert!(matches!(err, Err(Error::InvalidArgument(_))));
}

#[test]
fn identical_streams_reproduce_identical_estimates() {
    let dim = SpaceDim::new(3).unwrap();
    let alpha = FracOrder::new(1.4).unwrap();
    let u = bounded_bump(dim);
    let ball = tangent_ball(dim, 1.0).unwrap();
    let x = Point::new(&[0.1, -0.2, 0.5]).unwrap();
    let a = mc_extend(&u, &ball, &x, alpha, 5000, &RandomStream::new(99, 4)).unwrap();
    let b = mc_extend(&u, &ball, &x, alpha, 5000, &RandomStream::new(99, 4)).unwrap();
    assert_eq!(a, b);
    let c = mc_extend(&u, &ball, &x, alpha, 5000, &RandomStream::new(99, 5)).unwrap();
    assert_ne!(a.mean, c.mean);
}

#[test]
fn doubling_samples_shrinks_the_error_bar_like_sqrt_two() {
    let dim = SpaceDim::new(2).unwrap();
    let alpha = FracOrder::new(1.0).unwrap();
    let u = bounded_bump(dim);
    let ball = tangent_ball(dim, 2.0).unwrap();
    let x = Point::new(&[0.3, 0.8]).unwrap();
    let trials = 30;
    let (mut se_small, mut se_large) = (0.0, 0.0);
    for k in 0..trials {
        let small = mc_extend(&u, &ball, &x, alpha, 20_000, &RandomStream::new(1000, 2 * k))
            .unwrap();
        let large = mc_extend(&u, &ball, &x, alpha, 40_000, &RandomStream::new(1000, 2 * k + 1))
            .unwrap();
        se_small += small.std_error;
        se_large += large.std_error;
    }
    let ratio = se_small / se_large;
    let target = std::f64::consts::SQRT_2;
    assert!(
        (ratio / target - 1.0).abs() <= 0.10,
        "std_error ratio {ratio} vs sqrt(2)"
    );
}

#[test]
fn three_sigma_interval_covers_the_quadrature_value() {
    let dim = SpaceDim::new(2).unwrap();
    let alpha = FracOrder::new(1.0).unwrap();
    let u = bounded_bump(dim);
    let ball = tangent_ball(dim, 2.0).unwrap();
    let x = Point::new(&[0.0, 1.0]).unwrap();
    let spec = QuadratureSpec::new(1e-7, 1e-10, 5_000_000, 4.0).unwrap();
    let reference = poisson_extend(&u, &ball, &x, alpha, &spec).unwrap().value;
    let mut covered = 0;
    for id in 0..100 {
        let est = mc_extend(&u, &ball, &x, alpha, 10_000, &RandomStream::new(314, id)).unwrap();
        if (est.mean - reference).abs() <= 3.0 * est.std_error {
            covered += 1;
        }
    }
    assert!(covered >= 95, "3-sigma coverage {covered}/100");
}
