//! Barrier bounds from finite Blaschke products.
//!
//! `U = sum_j w_j log(1/|B_j|)` is superharmonic, vanishes on the unit circle
//! and is checked to be at least 1 on every bubble boundary, so by the maximum
//! principle it dominates the harmonic measure of the bubbles.

use std::borrow::Cow;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::ChampagneDomain;
use crate::error::{invalid, Error, Result};
use crate::hyperbolic::{ln_rho_unchecked, Point};
use crate::sequences::{shell_index, PointSequence, ProbeSet, TIE_TOLERANCE};

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 64;
/// Largest factor by which verification may scale the weights up.
pub const MAX_RESCALE: f64 = 10.0;
/// Weights count as ill-conditioned when `(a - b)/a` falls below this.
pub const ILL_CONDITIONED_RATIO: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeProduct {
    pub zeros: Vec<Point>,
}

impl BlaschkeProduct {
    pub fn new(zeros: Vec<Point>) -> Result<Self> {
        for z in &zeros {
            z.check_in_disk()?;
        }
        Ok(BlaschkeProduct { zeros })
    }

    pub fn log_abs(&self, z: Point) -> Result<f64> {
        log_blaschke(&self.zeros, z)
    }
}

/// `log|B(z)| = sum log rho(z, zero)`; `-inf` at a zero.
pub fn log_blaschke(zeros: &[Point], z: Point) -> Result<f64> {
    z.check_in_disk()?;
    Ok(zeros.iter().map(|&w| ln_rho_unchecked(z, w)).sum())
}

/// Shells `1 - eta^(j-1) <= |lambda| < 1 - eta^j` for `j = 1..=n`.
pub fn annular_partition(seq: &PointSequence, eta: f64, n: usize) -> Result<Vec<BlaschkeProduct>> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("eta must lie in (0,1), got {eta}")));
    }
    if n == 0 {
        return Err(invalid("at least one shell is needed"));
    }
    let mut shells = vec![Vec::new(); n];
    for &p in seq.points() {
        let j = shell_index(p.abs(), eta);
        if j <= n {
            shells[j - 1].push(p);
        }
    }
    Ok(shells.into_iter().map(|zeros| BlaschkeProduct { zeros }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// `w_(n-j) = (1/a) ((a-b)/a)^j`
    Lower,
    /// `w_(n-j) = (1/(a+b)) (a/(a+b))^j`
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub scheme: WeightScheme,
    /// `weights[j - 1]` is `w_j`.
    pub weights: Vec<f64>,
    pub ill_conditioned: bool,
}

/// Layer weights for `a > b >= 0`; `b = 0` gives equal weights `1/a`.
pub fn barrier_weights(a: f64, b: f64, n: usize, scheme: WeightScheme) -> Result<BarrierSpec> {
    if !(a > 0.0 && a.is_finite()) || !(b >= 0.0) {
        return Err(invalid(format!("need a > 0 and b >= 0, got a = {a}, b = {b}")));
    }
    if a <= b {
        return Err(invalid(format!("a = {a} must exceed b = {b}")));
    }
    if n == 0 {
        return Err(invalid("at least one layer is needed"));
    }
    let (w_top, ratio) = match scheme {
        WeightScheme::Lower => (1.0 / a, (a - b) / a),
        WeightScheme::Upper => (1.0 / (a + b), a / (a + b)),
    };
    let weights = (1..=n).map(|i| w_top * ratio.powi((n - i) as i32)).collect();
    Ok(BarrierSpec {
        a,
        b,
        n,
        scheme,
        weights,
        ill_conditioned: (a - b) / a < ILL_CONDITIONED_RATIO,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierCertificate {
    pub exterior_lower: f64,
    #[serde(rename = "U_at_start")]
    pub u_at_start: f64,
    #[serde(rename = "per_bubble_min_U")]
    pub per_bubble_min_u: Vec<f64>,
    pub rescale_factor: f64,
    pub spec: BarrierSpec,
    /// Shell of each bubble, `0` for bubbles beyond the last layer.
    pub bubble_shells: Vec<usize>,
    pub boundary_samples: usize,
}

/// Maximum-principle lower bound on the exterior measure at `start`.
///
/// `b` defaults to the smallest value of `U_(j+1)` over the sampled
/// boundaries of shell-`j` bubbles, kept below `0.999 a`; `n` defaults to the
/// outermost occupied shell.
pub fn barrier_lower_bound(
    domain: &ChampagneDomain,
    eta: f64,
    n: Option<usize>,
    b: Option<f64>,
    start: Point,
    boundary_samples: usize,
) -> Result<BarrierCertificate> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("eta must lie in (0,1), got {eta}")));
    }
    if boundary_samples == 0 {
        return Err(invalid("at least one boundary sample per bubble is needed"));
    }
    domain.distance_to_boundary(start)?;
    let domain: Cow<ChampagneDomain> = if start == Point::ZERO {
        Cow::Borrowed(domain)
    } else {
        Cow::Owned(domain.transported(start)?)
    };
    let bubbles = domain.bubbles();
    if bubbles.is_empty() {
        return Ok(BarrierCertificate {
            exterior_lower: 1.0,
            u_at_start: 0.0,
            per_bubble_min_u: vec![],
            rescale_factor: 1.0,
            spec: barrier_weights(1.0, b.unwrap_or(0.0).min(0.5), n.unwrap_or(1).max(1), WeightScheme::Lower)?,
            bubble_shells: vec![],
            boundary_samples,
        });
    }
    let a = bubbles
        .iter()
        .map(|bb| -bb.pseudo.radius.ln())
        .fold(f64::INFINITY, f64::min);
    let shells: Vec<usize> = bubbles.iter().map(|bb| shell_index(bb.pseudo.center.abs(), eta)).collect();
    let n = n.unwrap_or_else(|| *shells.iter().max().expect("nonempty"));
    if n == 0 {
        return Err(invalid("at least one layer is needed"));
    }
    let samples: Vec<Vec<Point>> = bubbles
        .iter()
        .map(|bb| {
            (0..boundary_samples)
                .map(|i| bb.disk.boundary_point(TAU * i as f64 / boundary_samples as f64))
                .collect()
        })
        .collect();
    // per-shell potential at a point: layer_u[j-1] = U_j
    let layer_u = |z: Point| {
        let mut u = vec![0.0; n];
        for (bb, &j) in bubbles.iter().zip(&shells) {
            if j <= n {
                u[j - 1] -= ln_rho_unchecked(z, bb.pseudo.center);
            }
        }
        u
    };
    let sampled: Vec<Vec<Vec<f64>>> = samples
        .par_iter()
        .map(|pts| pts.iter().map(|&z| layer_u(z)).collect())
        .collect();

    let b = match b {
        Some(b) => b,
        None => {
            let mut best = f64::INFINITY;
            for (k, &j) in shells.iter().enumerate() {
                if j < n {
                    for u in &sampled[k] {
                        best = best.min(u[j]);
                    }
                }
            }
            if best.is_finite() {
                best.min(0.999 * a)
            } else {
                0.0
            }
        }
    };
    let spec = barrier_weights(a, b, n, WeightScheme::Lower)?;
    let combine = |u: &[f64]| u.iter().zip(&spec.weights).map(|(x, w)| x * w).sum::<f64>();
    let per_bubble_min_u: Vec<f64> = sampled
        .iter()
        .map(|pts| pts.iter().map(|u| combine(u)).fold(f64::INFINITY, f64::min))
        .collect();
    let min_u = per_bubble_min_u.iter().copied().fold(f64::INFINITY, f64::min);
    let rescale_factor = if min_u >= 1.0 { 1.0 } else { 1.0 / min_u };
    if !(rescale_factor <= MAX_RESCALE) {
        return Err(Error::Refusal(format!(
            "barrier needs rescaling by {rescale_factor:.3} (> {MAX_RESCALE}); minimum of U on the bubbles is {min_u:.3e}"
        )));
    }
    let u_at_start = rescale_factor * combine(&layer_u(Point::ZERO));
    Ok(BarrierCertificate {
        exterior_lower: (1.0 - u_at_start).max(0.0),
        u_at_start,
        per_bubble_min_u: per_bubble_min_u.iter().map(|u| u * rescale_factor).collect(),
        rescale_factor,
        spec,
        bubble_shells: shells.iter().map(|&j| if j <= n { j } else { 0 }).collect(),
        boundary_samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremal {
    pub value: f64,
    /// Probe (for `c`) or sequence point (for `d`) attaining the value.
    pub at: Option<Point>,
    pub n_evaluated: usize,
}

/// `log|B_z(z)|` with zeros at the sequence points `1/2 < rho(z, lambda) < r`.
pub fn annulus_log_blaschke(seq: &PointSequence, z: Point, r: f64) -> f64 {
    seq.within_pseudo(z, r)
        .into_iter()
        .filter(|&(_, rho)| rho > 0.5 + TIE_TOLERANCE && rho < r - TIE_TOLERANCE)
        .map(|(i, _)| ln_rho_unchecked(z, seq.points()[i]))
        .sum()
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.5 && r < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("r must lie in (1/2, 1), got {r}")))
    }
}

/// `c(r)`: the largest annulus Blaschke value over the probes.
pub fn extremal_c(seq: &PointSequence, r: f64, probes: &ProbeSet) -> Result<Extremal> {
    check_r(r)?;
    let vals: Vec<f64> = probes
        .points
        .par_iter()
        .map(|&z| annulus_log_blaschke(seq, z, r))
        .collect();
    Ok(extreme(&vals, &probes.points, |a, b| a > b))
}

/// `d(r)`: the smallest annulus Blaschke value `log|B_lambda(lambda)|`.
pub fn extremal_d(seq: &PointSequence, r: f64) -> Result<Extremal> {
    check_r(r)?;
    let vals: Vec<f64> = seq
        .points()
        .par_iter()
        .map(|&l| annulus_log_blaschke(seq, l, r))
        .collect();
    Ok(extreme(&vals, seq.points(), |a, b| a < b))
}

fn extreme(vals: &[f64], at: &[Point], better: impl Fn(f64, f64) -> bool) -> Extremal {
    let mut best: Option<(f64, Point)> = None;
    for (&v, &p) in vals.iter().zip(at) {
        if best.is_none_or(|(bv, _)| better(v, bv)) {
            best = Some((v, p));
        }
    }
    Extremal {
        value: best.map_or(0.0, |b| b.0),
        at: best.map(|b| b.1),
        n_evaluated: vals.len(),
    }
}
