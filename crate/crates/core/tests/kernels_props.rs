//! Structural properties of the kernel family over randomized
//! configurations: strict positivity on the open support, the exact
//! λ^{−n} scaling covariance of the ball kernel, and rotational symmetry
//! of the radial kernels.

use fracharm::geom::{Ball, FracOrder, Point, SpaceDim};
use fracharm::kernels::{mean_value_kernel, poisson_kernel, riesz_kernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dim(n: usize) -> SpaceDim {
    SpaceDim::new(n).unwrap()
}

fn fo(a: f64) -> FracOrder {
    FracOrder::new(a).unwrap()
}

/// Uniform point in the open unit ball, rejection-sampled, with norm
/// bounded away from zero so it can be rescaled to a direction.
fn ball_direction(rng: &mut ChaCha8Rng, n: usize) -> Point {
    loop {
        let coords: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = Point::new(&coords).unwrap();
        let norm = p.norm();
        if norm > 0.05 && norm < 1.0 {
            return p;
        }
    }
}

/// Point at distance exactly `target` (up to rounding) from the origin.
fn with_norm(rng: &mut ChaCha8Rng, n: usize, target: f64) -> Point {
    let p = ball_direction(rng, n);
    p.scale(target / p.norm())
}

#[test]
fn kernels_are_positive_on_their_open_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for &n in &[1usize, 2, 3] {
        let d = dim(n);
        let ball = Ball::new(Point::zero(d), 1.0).unwrap();
        for &a in &[0.3, 1.0, 1.7] {
            let alpha = fo(a);
            for _ in 0..20 {
                let x = ball_direction(&mut rng, n).scale(0.95);
                let y = with_norm(&mut rng, n, 1.05 + 19.0 * rng.gen::<f64>());
                let p = poisson_kernel(&ball, &x, &y, alpha).unwrap();
                assert!(p > 0.0, "ball kernel not positive: n={n} alpha={a} got {p}");
                let e = mean_value_kernel(alpha, 1.0, &y).unwrap();
                assert!(
                    e > 0.0,
                    "mean-value kernel not positive: n={n} alpha={a} got {e}"
                );
                if (n as f64) > a {
                    let k = riesz_kernel(d, alpha, &x, &y).unwrap();
                    assert!(k > 0.0, "riesz kernel not positive: n={n} alpha={a} got {k}");
                }
            }
        }
    }
}

#[test]
fn ball_kernel_scales_with_power_minus_n() {
    // P_{λB}(λx, λy) = λ^{−n} P_B(x, y) for every dilation factor λ.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for &n in &[1usize, 2, 3] {
        let d = dim(n);
        for &a in &[0.3, 1.0, 1.7] {
            let alpha = fo(a);
            for _ in 0..5 {
                let lambda = 0.3 + 2.7 * rng.gen::<f64>();
                let c = ball_direction(&mut rng, n).scale(0.5);
                let r = 0.5 + rng.gen::<f64>();
                let ball = Ball::new(c, r).unwrap();
                let x = c.add_scaled(r, &ball_direction(&mut rng, n).scale(0.9));
                let y = c.add_scaled(r * (1.1 + 3.9 * rng.gen::<f64>()), &{
                    let p = ball_direction(&mut rng, n);
                    p.scale(1.0 / p.norm())
                });
                let base = poisson_kernel(&ball, &x, &y, alpha).unwrap();
                let scaled_ball = Ball::new(c.scale(lambda), lambda * r).unwrap();
                let scaled =
                    poisson_kernel(&scaled_ball, &x.scale(lambda), &y.scale(lambda), alpha)
                        .unwrap();
                let want = lambda.powi(-(n as i32)) * base;
                let rel = (scaled - want).abs() / want.abs();
                assert!(
                    rel <= 1e-12,
                    "scaling covariance off by rel {rel:.3e}: n={n} alpha={a} lambda={lambda}"
                );
            }
        }
    }
}

#[test]
fn mean_value_kernel_is_rotation_invariant() {
    let alpha = fo(1.3);

    // Exact symmetries first: coordinate permutations and sign flips leave
    // |x| unchanged up to summation order.
    let x = Point::new(&[1.7, -0.4, 2.2]).unwrap();
    let base = mean_value_kernel(alpha, 1.0, &x).unwrap();
    for perm in [[0usize, 2, 1], [1, 0, 2], [2, 1, 0], [1, 2, 0]] {
        let coords: Vec<f64> = perm.iter().map(|&i| x.coord(i)).collect();
        let px = Point::new(&coords).unwrap();
        let v = mean_value_kernel(alpha, 1.0, &px).unwrap();
        let rel = (v - base).abs() / base;
        assert!(rel <= 1e-12, "permutation changed the kernel by rel {rel:.3e}");
    }
    let flipped = Point::new(&[-1.7, 0.4, 2.2]).unwrap();
    let v = mean_value_kernel(alpha, 1.0, &flipped).unwrap();
    assert!((v - base).abs() / base <= 1e-12);

    // Genuine planar rotations, keeping the point well away from the
    // sphere so rounding in |x| is not amplified by the edge factor.
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let x2 = Point::new(&[1.4, -0.9]).unwrap();
    let base2 = mean_value_kernel(alpha, 1.0, &x2).unwrap();
    for _ in 0..10 {
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (s, c) = th.sin_cos();
        let rx = Point::new(&[
            c * x2.coord(0) - s * x2.coord(1),
            s * x2.coord(0) + c * x2.coord(1),
        ])
        .unwrap();
        let v = mean_value_kernel(alpha, 1.0, &rx).unwrap();
        let rel = (v - base2).abs() / base2;
        assert!(rel <= 1e-12, "rotation changed the kernel by rel {rel:.3e}");
    }
}
