//! Pseudohyperbolic geometry of the unit disk.
//!
//! All quantities are double precision. Points within `1e-12` of the unit
//! circle are rejected by the in-disk constructors; the walker uses its own
//! epsilon shell near the boundary and never needs them.

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Points closer than this to the unit circle are treated as degenerate.
pub const BOUNDARY_MARGIN: f64 = 1e-12;

/// A complex number. Only [`Point::in_disk`] enforces membership in the open
/// unit disk; intermediate values (e.g. Möbius images of boundary points) may
/// lie anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub re: f64,
    pub im: f64,
}

impl Point {
    pub const ZERO: Point = Point { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Point { re, im }
    }

    /// Constructs a point of the open unit disk, rejecting `|z| > 1 - 1e-12`.
    pub fn in_disk(re: f64, im: f64) -> Result<Self> {
        let p = Point { re, im };
        p.check_in_disk()?;
        Ok(p)
    }

    pub fn polar(modulus: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point::new(modulus * c, modulus * s)
    }

    pub fn check_in_disk(self) -> Result<()> {
        let m = self.abs();
        if !m.is_finite() || m > 1.0 - BOUNDARY_MARGIN {
            return Err(Error::OutsideDisk {
                re: self.re,
                im: self.im,
                modulus: m,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    #[inline]
    pub fn conj(self) -> Self {
        Point::new(self.re, -self.im)
    }

    #[inline]
    pub fn arg(self) -> f64 {
        self.im.atan2(self.re)
    }

    #[inline]
    pub fn scale(self, k: f64) -> Self {
        Point::new(self.re * k, self.im * k)
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for Point {
    type Output = Point;
    #[inline]
    fn mul(self, o: Point) -> Point {
        Point::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Div for Point {
    type Output = Point;
    #[inline]
    fn div(self, o: Point) -> Point {
        let d = o.norm_sqr();
        Point::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.re, -self.im)
    }
}

impl From<(f64, f64)> for Point {
    fn from((re, im): (f64, f64)) -> Self {
        Point::new(re, im)
    }
}

/// A Euclidean disk `{w : |w - center| <= radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanDisk {
    pub center: Point,
    pub radius: f64,
}

impl EuclideanDisk {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(invalid(format!("disk radius must be positive, got {radius}")));
        }
        Ok(EuclideanDisk { center, radius })
    }

    /// True when the closed disk lies in the open unit disk.
    pub fn inside_unit_disk(&self) -> bool {
        self.center.abs() + self.radius < 1.0
    }

    pub fn boundary_point(&self, angle: f64) -> Point {
        self.center + Point::polar(self.radius, angle)
    }

    pub fn circumference(&self) -> f64 {
        std::f64::consts::TAU * self.radius
    }
}

/// The closed pseudohyperbolic disk `{w : rho(center, w) <= radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoDisk {
    pub center: Point,
    pub radius: f64,
}

impl PseudoDisk {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        center.check_in_disk()?;
        if !(radius > 0.0 && radius < 1.0) {
            return Err(invalid(format!(
                "pseudohyperbolic radius must lie in (0,1), got {radius}"
            )));
        }
        Ok(PseudoDisk { center, radius })
    }
}

/// `1 - rho(z, w)^2`, computed without cancellation.
#[inline]
pub(crate) fn one_minus_rho_sq(z: Point, w: Point) -> f64 {
    let denom = (Point::new(1.0, 0.0) - w.conj() * z).norm_sqr();
    (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr()) / denom
}

#[inline]
pub(crate) fn rho_unchecked(z: Point, w: Point) -> f64 {
    let num = z - w;
    let den = Point::new(1.0, 0.0) - w.conj() * z;
    (num.norm_sqr() / den.norm_sqr()).sqrt()
}

/// `ln rho(z, w)` for points of the disk; `-inf` when `z == w`.
#[inline]
pub(crate) fn ln_rho_unchecked(z: Point, w: Point) -> f64 {
    let rho_sq = rho_unchecked(z, w).powi(2);
    if rho_sq < 0.25 {
        0.5 * rho_sq.ln()
    } else {
        0.5 * (-one_minus_rho_sq(z, w)).ln_1p()
    }
}

/// Pseudohyperbolic distance `|(z - w) / (1 - conj(w) z)|`.
pub fn pseudo_distance(z: Point, w: Point) -> Result<f64> {
    z.check_in_disk()?;
    w.check_in_disk()?;
    Ok(rho_unchecked(z, w))
}

/// The disk automorphism `phi_a(z) = (a - z) / (1 - conj(a) z)`.
///
/// It is an involution exchanging `a` and `0`, and maps the unit circle onto
/// itself.
pub fn mobius_apply(a: Point, z: Point) -> Result<Point> {
    a.check_in_disk()?;
    if z.abs() > 1.0 + BOUNDARY_MARGIN {
        return Err(invalid(format!(
            "mobius_apply is defined on the closed disk, got |z| = {}",
            z.abs()
        )));
    }
    Ok(mobius_unchecked(a, z))
}

#[inline]
pub(crate) fn mobius_unchecked(a: Point, z: Point) -> Point {
    (a - z) / (Point::new(1.0, 0.0) - a.conj() * z)
}

/// Euclidean realization of a pseudohyperbolic disk.
///
/// Center `c(1 - r^2) / (1 - r^2 |c|^2)`, radius `r(1 - |c|^2) / (1 - r^2 |c|^2)`.
pub fn pseudo_to_euclidean(d: PseudoDisk) -> EuclideanDisk {
    let r2 = d.radius * d.radius;
    let c2 = d.center.norm_sqr();
    let denom = 1.0 - r2 * c2;
    EuclideanDisk {
        center: d.center.scale((1.0 - r2) / denom),
        radius: d.radius * (1.0 - c2) / denom,
    }
}

/// Inverse of [`pseudo_to_euclidean`] for disks strictly inside the unit disk.
///
/// Along the ray through the center the disk spans `[m - R, m + R]`; the
/// pseudohyperbolic center and radius are hyperbolic midpoint and half-width
/// of that interval, written with `tanh(atanh(y)/2) = y / (1 + sqrt(1 - y^2))`
/// so that tiny radii keep full relative precision.
pub fn euclidean_to_pseudo(e: EuclideanDisk) -> Result<PseudoDisk> {
    if !e.inside_unit_disk() {
        return Err(invalid("disk is not contained in the open unit disk"));
    }
    let m = e.center.abs();
    let big_r = e.radius;
    let q = 1.0 - (m * m - big_r * big_r);
    let half = |y: f64| y / (1.0 + (1.0 - y * y).max(0.0).sqrt());
    let radius = half(2.0 * big_r / q);
    let center_mod = half(2.0 * m / (1.0 + m * m - big_r * big_r));
    let center = if m > 0.0 {
        e.center.scale(center_mod / m)
    } else {
        Point::ZERO
    };
    PseudoDisk::new(center, radius)
}
