//! Geometric domain types: the operator order, the ambient dimension,
//! points, and balls.
//!
//! All four are plain-data newtypes whose constructors enforce the crate's
//! global invariants, so downstream numerics never re-validate:
//!
//! * [`FracOrder`]: α strictly inside (0, 2);
//! * [`SpaceDim`]: 1 ≤ n ≤ 8 (a desk-scale cap, the formulas hold for all n);
//! * [`Point`]: exactly n finite coordinates (stored inline, `Copy`);
//! * [`Ball`]: finite center, radius strictly positive and finite.

use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Hard cap on the ambient dimension; keeps [`Point`] inline and `Copy`.
pub const MAX_DIM: usize = 8;

/// Order α of the fractional Laplacian, confined to the open interval (0, 2).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha < 2.0) {
            return Err(Error::invalid(format!(
                "alpha must lie strictly inside the open interval (0, 2), got {alpha}"
            )));
        }
        Ok(FracOrder(alpha))
    }

    #[inline(always)]
    pub fn alpha(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        FracOrder::new(v)
    }
}

impl From<FracOrder> for f64 {
    fn from(a: FracOrder) -> f64 {
        a.0
    }
}

/// Ambient dimension n, 1 ≤ n ≤ [`MAX_DIM`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct SpaceDim(usize);

impl SpaceDim {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::invalid(format!(
                "dimension must satisfy 1 <= n <= {MAX_DIM}, got {n}"
            )));
        }
        Ok(SpaceDim(n))
    }

    #[inline(always)]
    pub fn n(self) -> usize {
        self.0
    }

    /// n as f64, handy in kernel exponents.
    #[inline(always)]
    pub fn nf(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<usize> for SpaceDim {
    type Error = Error;
    fn try_from(v: usize) -> Result<Self> {
        SpaceDim::new(v)
    }
}

impl From<SpaceDim> for usize {
    fn from(d: SpaceDim) -> usize {
        d.0
    }
}

/// A point of ℝⁿ. Stored inline; coordinates beyond `dim` are zero, which
/// lets norms and dot products run over the full array branch-free.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: SpaceDim,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = SpaceDim::new(coords.len())?;
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "point coordinates must be finite, got {coords:?}"
            )));
        }
        let mut buf = [0.0; MAX_DIM];
        buf[..coords.len()].copy_from_slice(coords);
        Ok(Point { coords: buf, dim })
    }

    /// Origin of ℝⁿ.
    pub fn zero(dim: SpaceDim) -> Self {
        Point {
            coords: [0.0; MAX_DIM],
            dim,
        }
    }

    /// `value · e_axis` (unit-vector multiple along a coordinate axis).
    pub fn axis(dim: SpaceDim, axis: usize, value: f64) -> Result<Self> {
        if axis >= dim.n() {
            return Err(Error::invalid(format!(
                "axis index {axis} out of range for dimension {}",
                dim.n()
            )));
        }
        if !value.is_finite() {
            return Err(Error::invalid("axis coordinate must be finite"));
        }
        let mut p = Point::zero(dim);
        p.coords[axis] = value;
        Ok(p)
    }

    #[inline(always)]
    pub fn dim(&self) -> SpaceDim {
        self.dim
    }

    #[inline(always)]
    pub fn coord(&self, i: usize) -> f64 {
        debug_assert!(i < self.dim.n());
        self.coords[i]
    }

    /// Last coordinate x_n, the distinguished direction of the half-space.
    #[inline(always)]
    pub fn last(&self) -> f64 {
        self.coords[self.dim.n() - 1]
    }

    #[inline(always)]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim.n()]
    }

    #[inline(always)]
    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    #[inline(always)]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline(always)]
    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    #[inline(always)]
    pub fn dist_sq(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..MAX_DIM {
            let d = self.coords[i] - other.coords[i];
            s += d * d;
        }
        s
    }

    #[inline(always)]
    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..MAX_DIM {
            s += self.coords[i] * other.coords[i];
        }
        s
    }

    #[inline(always)]
    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..MAX_DIM {
            out.coords[i] -= other.coords[i];
        }
        out
    }

    #[inline(always)]
    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for i in 0..MAX_DIM {
            out.coords[i] += other.coords[i];
        }
        out
    }

    /// `self + s · dir`.
    #[inline(always)]
    pub fn add_scaled(&self, s: f64, dir: &Point) -> Point {
        debug_assert_eq!(self.dim, dir.dim);
        let mut out = *self;
        for i in 0..MAX_DIM {
            out.coords[i] += s * dir.coords[i];
        }
        out
    }

    #[inline(always)]
    pub fn scale(&self, s: f64) -> Point {
        let mut out = *self;
        for c in &mut out.coords {
            *c *= s;
        }
        out
    }

    /// Overwrite one coordinate (axis must be in range).
    #[inline(always)]
    pub fn with_coord(&self, axis: usize, value: f64) -> Point {
        debug_assert!(axis < self.dim.n());
        let mut out = *self;
        out.coords[axis] = value;
        out
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(&v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Vec<f64> {
        p.as_slice().to_vec()
    }
}

/// Euclidean ball: center and strictly positive finite radius.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "ball radius must be strictly positive and finite, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    #[inline(always)]
    pub fn center(&self) -> &Point {
        &self.center
    }

    #[inline(always)]
    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline(always)]
    pub fn dim(&self) -> SpaceDim {
        self.center.dim()
    }

    /// Signed position of `x` relative to the sphere: |x−c| − r.
    #[inline(always)]
    pub fn sphere_gap(&self, x: &Point) -> f64 {
        x.dist(&self.center) - self.radius
    }

    #[inline(always)]
    pub fn is_strictly_interior(&self, x: &Point) -> bool {
        x.dist(&self.center) < self.radius
    }

    #[inline(always)]
    pub fn is_strictly_exterior(&self, x: &Point) -> bool {
        x.dist(&self.center) > self.radius
    }
}
