//! The three kernels of the theory: the α-Poisson kernel of a ball, the
//! exterior mean-value kernel, and the Riesz kernel.
//!
//! The first two share one normalization constant c(n, α); factoring it into
//! [`normalization_constant`] keeps them consistent by construction. Off
//! their support both kernels return literal 0. Evaluation exactly on a
//! support sphere is a domain error: the one-sided limits there are 0 and
//! +∞, so no single value is right, and the quadrature layer never lands on
//! the sphere (its edge substitution keeps t = |y−c|² − r² strictly
//! positive).

use crate::error::Error;
use crate::geom::{Ball, FracOrder, Point, SpaceDim};
use crate::special::normalization_constant;
use crate::Result;

/// P_r(x−c, y−c) = c(n,α) · [(r²−|x−c|²)/(|y−c|²−r²)]^{α/2} / |x−y|^n for
/// x strictly inside and y strictly outside the ball; 0 for y strictly
/// inside or x strictly outside.
pub fn poisson_kernel(ball: &Ball, x: &Point, y: &Point, alpha: FracOrder) -> Result<f64> {
    let dim = ball.dim();
    if x.dim() != dim || y.dim() != dim {
        return Err(Error::invalid("poisson kernel: dimension mismatch"));
    }
    if x == y {
        return Err(Error::domain(
            "poisson kernel is singular on the diagonal x = y",
        ));
    }
    let r = ball.radius();
    let dx = x.dist(ball.center());
    let dy = y.dist(ball.center());
    if dy == r || dx == r {
        return Err(Error::domain(
            "poisson kernel evaluated exactly on the support sphere",
        ));
    }
    if dy < r || dx > r {
        return Ok(0.0);
    }
    let a = alpha.alpha();
    let num = (r - dx) * (r + dx);
    let den = (dy - r) * (dy + r);
    let c = normalization_constant(dim, alpha);
    Ok(c * (num / den).powf(0.5 * a) / x.dist(y).powf(dim.nf()))
}

/// Poisson kernel from precomputed invariants: gap = r² − |x−c|²,
/// t = |y−c|² − r² (exact, from the quadrature substitution), s = |x−y|.
/// This is the form the integration engines use; it never touches the
/// cancellation-prone differences.
pub fn poisson_kernel_parts(
    dim: SpaceDim,
    alpha: FracOrder,
    gap: f64,
    t: f64,
    s: f64,
) -> f64 {
    let c = normalization_constant(dim, alpha);
    c * (gap / t).powf(0.5 * alpha.alpha()) / s.powf(dim.nf())
}

/// ε_α^{(r)}(x) = c(n,α) · r^α / ((|x|²−r²)^{α/2} |x|^n) for |x| > r,
/// 0 for |x| < r.
pub fn mean_value_kernel(alpha: FracOrder, r: f64, x: &Point) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(format!(
            "mean-value kernel needs r > 0, got {r}"
        )));
    }
    let nx = x.norm();
    if nx == r {
        return Err(Error::domain(
            "mean-value kernel evaluated exactly on its support sphere",
        ));
    }
    if nx < r {
        return Ok(0.0);
    }
    Ok(mean_value_kernel_parts(
        x.dim(),
        alpha,
        r,
        (nx - r) * (nx + r),
        nx,
    ))
}

/// Mean-value kernel from invariants: t = |x|² − r² exact, rho = |x|.
pub fn mean_value_kernel_parts(
    dim: SpaceDim,
    alpha: FracOrder,
    r: f64,
    t: f64,
    rho: f64,
) -> f64 {
    let a = alpha.alpha();
    let c = normalization_constant(dim, alpha);
    c * r.powf(a) * t.powf(-0.5 * a) / rho.powf(dim.nf())
}

/// Riesz kernel |x−z|^{−(n−α)}, the fundamental solution's profile
/// (multiplicative constant left symbolic, as only ratios are used).
/// Requires n > α so the exponent is positive.
pub fn riesz_kernel(n: SpaceDim, alpha: FracOrder, x: &Point, z: &Point) -> Result<f64> {
    if n.nf() <= alpha.alpha() {
        return Err(Error::invalid(format!(
            "riesz kernel needs n > alpha, got n = {}, alpha = {}",
            n.n(),
            alpha.alpha()
        )));
    }
    if x.dim() != n || z.dim() != n {
        return Err(Error::invalid("riesz kernel: dimension mismatch"));
    }
    if x == z {
        return Err(Error::domain("riesz kernel is singular at x = z"));
    }
    Ok(x.dist(z).powf(alpha.alpha() - n.nf()))
}
