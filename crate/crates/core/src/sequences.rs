//! Point sequences: generation, separation, covering, Blaschke sums and
//! uniform densities.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hyperbolic::{pseudo_to_euclidean, rho_unchecked, Point, PseudoDisk};
use crate::spatial::DiskIndex;
use crate::streams::walk_stream;

/// Above this size separation uses the spatial index instead of a pair scan.
pub const EXACT_SCAN_LIMIT: usize = 10_000;

/// Slack for membership tests against a radius shared by whole rings: lattice
/// points sit exactly on level sets of rho, and rounding must not decide
/// membership.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// An ordered sequence of distinct points of the open unit disk.
#[derive(Debug, Clone)]
pub struct PointSequence {
    points: Vec<Point>,
    label: String,
    index: OnceLock<DiskIndex>,
}

impl PointSequence {
    /// Validates that every point is in the disk and no two coincide.
    /// Duplicates are rejected, never merged.
    pub fn new(points: Vec<Point>, label: impl Into<String>) -> Result<Self> {
        for p in &points {
            p.check_in_disk()?;
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[a]
                .re
                .total_cmp(&points[b].re)
                .then(points[a].im.total_cmp(&points[b].im))
        });
        for w in order.windows(2) {
            if rho_unchecked(points[w[0]], points[w[1]]) == 0.0 {
                return Err(invalid(format!(
                    "sequence points {} and {} coincide",
                    w[0].min(w[1]),
                    w[0].max(w[1])
                )));
            }
        }
        Ok(PointSequence {
            points,
            label: label.into(),
            index: OnceLock::new(),
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|p| p.abs()).fold(0.0, f64::max)
    }

    /// A new sequence with `extra` appended.
    pub fn with_points(&self, extra: &[Point]) -> Result<Self> {
        let mut pts = self.points.clone();
        pts.extend_from_slice(extra);
        PointSequence::new(pts, self.label.clone())
    }

    /// The image of the sequence under `phi_a`.
    pub fn transported(&self, a: Point) -> Result<Self> {
        let pts = self
            .points
            .iter()
            .map(|&p| crate::hyperbolic::mobius_apply(a, p))
            .collect::<Result<Vec<_>>>()?;
        PointSequence::new(pts, format!("{} (transported)", self.label))
    }

    pub(crate) fn index(&self) -> &DiskIndex {
        self.index
            .get_or_init(|| DiskIndex::build(self.points.iter().map(|&p| (p, 0.0))))
    }

    /// Points with `rho(z, lambda) <= r`, as `(index, rho)` in index order.
    pub fn within_pseudo(&self, z: Point, r: f64) -> Vec<(usize, f64)> {
        let e = pseudo_to_euclidean(PseudoDisk {
            center: z,
            radius: r.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16),
        });
        // a hair of Euclidean slack; the exact test below decides membership
        let slack = 1e-12 * (1.0 + e.radius);
        self.index()
            .within(e.center, e.radius + slack)
            .into_iter()
            .map(|i| (i, rho_unchecked(z, self.points[i])))
            .filter(|&(_, d)| d <= r)
            .collect()
    }

    /// Nearest point to `z` in the pseudohyperbolic metric.
    pub fn nearest_pseudo(&self, z: Point) -> Option<(usize, f64)> {
        self.nearest_pseudo_excluding(z, None)
    }

    fn nearest_pseudo_excluding(&self, z: Point, exclude: Option<usize>) -> Option<(usize, f64)> {
        let e = self.index().nearest_below(z, f64::INFINITY, exclude)?;
        let mut best = (e.index, rho_unchecked(z, self.points[e.index]));
        for (i, d) in self.within_pseudo(z, best.1) {
            if Some(i) == exclude {
                continue;
            }
            if d < best.1 || (d == best.1 && i < best.0) {
                best = (i, d);
            }
        }
        Some(best)
    }
}

/// Parameters of a ring lattice: rings `|z| = 1 - q^j`, `j = 1..=depth`, with
/// `ceil(scale * q^-j)` equally spaced points each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingLattice {
    pub q: f64,
    pub scale: f64,
    pub depth: u32,
    /// `None` leaves every ring unrotated.
    pub phase_seed: Option<u64>,
}

impl RingLattice {
    pub fn new(q: f64, scale: f64, depth: u32) -> Self {
        RingLattice {
            q,
            scale,
            depth,
            phase_seed: None,
        }
    }

    pub fn with_phase_seed(mut self, seed: u64) -> Self {
        self.phase_seed = Some(seed);
        self
    }

    pub fn ring_radius(&self, j: u32) -> f64 {
        1.0 - self.q.powi(j as i32)
    }

    pub fn ring_count(&self, j: u32) -> usize {
        let x = self.scale * self.q.powi(-(j as i32));
        let nearest = x.round();
        // q^-j is inexact for most q; do not let rounding add a point
        let n = if (x - nearest).abs() <= 1e-9 * x {
            nearest
        } else {
            x.ceil()
        };
        n.max(1.0) as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(invalid(format!("ring ratio q must lie in (0,1), got {}", self.q)));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(invalid(format!("points_per_ring_scale must be positive, got {}", self.scale)));
        }
        if self.depth < 1 {
            return Err(invalid("ring lattice depth must be at least 1"));
        }
        if self.ring_radius(self.depth) > 1.0 - crate::hyperbolic::BOUNDARY_MARGIN {
            return Err(invalid(format!(
                "ring {} of q = {} is numerically on the unit circle",
                self.depth, self.q
            )));
        }
        Ok(())
    }

    /// Lower bound on the separation: the smaller of the radial step between
    /// consecutive rings and the in-ring spacing of adjacent points.
    pub fn separation_lower_bound(&self) -> f64 {
        let mut bound: f64 = 1.0;
        for j in 1..=self.depth {
            let m = self.ring_radius(j);
            let n = self.ring_count(j);
            if n > 1 {
                let a = Point::new(m, 0.0);
                let b = Point::polar(m, TAU / n as f64);
                bound = bound.min(rho_unchecked(a, b));
            }
            if j < self.depth {
                let m2 = self.ring_radius(j + 1);
                bound = bound.min((m2 - m) / (1.0 - m * m2));
            }
        }
        bound
    }
}

pub fn generate_ring_lattice(params: &RingLattice) -> Result<PointSequence> {
    params.validate()?;
    let mut phases = params.phase_seed.map(|s| walk_stream(s, 0));
    let mut pts = Vec::new();
    for j in 1..=params.depth {
        let m = params.ring_radius(j);
        let n = params.ring_count(j);
        let phase = phases
            .as_mut()
            .map(|r| TAU * r.random::<f64>())
            .unwrap_or(0.0);
        for k in 0..n {
            pts.push(Point::polar(m, phase + TAU * k as f64 / n as f64));
        }
    }
    PointSequence::new(
        pts,
        format!("ring q={} scale={} depth={}", params.q, params.scale, params.depth),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub value: f64,
    /// Fewer than two points: the pair set is empty and `value` is 1.
    pub vacuous: bool,
    pub pair: Option<(usize, usize)>,
}

pub fn separation(seq: &PointSequence) -> Separation {
    let pts = seq.points();
    if pts.len() < 2 {
        return Separation {
            value: 1.0,
            vacuous: true,
            pair: None,
        };
    }
    let mut best = (f64::INFINITY, 0usize, 1usize);
    if pts.len() <= EXACT_SCAN_LIMIT {
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = rho_unchecked(pts[i], pts[j]);
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
    } else {
        for (i, &p) in pts.iter().enumerate() {
            if let Some((j, d)) = seq.nearest_pseudo_excluding(p, Some(i)) {
                let (a, b) = (i.min(j), i.max(j));
                if d < best.0 || (d == best.0 && (a, b) < (best.1, best.2)) {
                    best = (d, a, b);
                }
            }
        }
    }
    Separation {
        value: best.0,
        vacuous: false,
        pair: Some((best.1, best.2)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeSum {
    pub value: f64,
    pub classified_divergent: bool,
}

/// `sum (1 - |lambda|)`, flagged divergent once it exceeds the threshold.
pub fn blaschke_sum(seq: &PointSequence, divergence_threshold: f64) -> BlaschkeSum {
    let value: f64 = seq.points().iter().map(|p| 1.0 - p.abs()).sum();
    BlaschkeSum {
        value,
        classified_divergent: value > divergence_threshold,
    }
}

/// Index `j >= 1` of the shell `1 - q^(j-1) <= |z| < 1 - q^j` containing `modulus`.
pub(crate) fn shell_index(modulus: f64, q: f64) -> usize {
    let x = (1.0 - modulus).ln() / q.ln();
    // snap values sitting on a shell boundary onto it
    let snapped = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.floor() };
    snapped.max(0.0) as usize + 1
}

/// Cumulative Blaschke sums over the shells `1 - q^(j-1) <= |z| < 1 - q^j`,
/// `j = 1..=shells`, exposing the growth trend of generated families.
pub fn blaschke_partial_sums(seq: &PointSequence, q: f64, shells: usize) -> Vec<f64> {
    let mut per = vec![0.0; shells];
    for p in seq.points() {
        let j = shell_index(p.abs(), q);
        if j <= shells {
            per[j - 1] += 1.0 - p.abs();
        }
    }
    per.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// A finite set of probe points standing in for "all z in the disk".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub points: Vec<Point>,
    pub description: String,
}

impl ProbeSet {
    pub fn from_points(points: Vec<Point>, description: impl Into<String>) -> Self {
        ProbeSet {
            points,
            description: description.into(),
        }
    }

    /// Pseudohyperbolically equidistributed grid on `|z| <= max_modulus`:
    /// consecutive rings and neighbours on a ring are `1/(density + 1)` apart
    /// in the pseudohyperbolic metric; the rim `|z| = max_modulus` is included.
    pub fn pseudo_grid(max_modulus: f64, density: u32) -> Result<Self> {
        if !(0.0..1.0).contains(&max_modulus) {
            return Err(invalid(format!("probe modulus must lie in [0,1), got {max_modulus}")));
        }
        if density < 1 {
            return Err(invalid("grid density must be at least 1"));
        }
        let step = 1.0 / (density as f64 + 1.0);
        let mut radii = vec![0.0];
        let mut m: f64 = 0.0;
        loop {
            m = (m + step) / (1.0 + m * step);
            if m >= max_modulus {
                break;
            }
            radii.push(m);
        }
        if max_modulus > 0.0 {
            radii.push(max_modulus);
        }
        let mut points = Vec::new();
        for &m in &radii {
            if m == 0.0 {
                points.push(Point::ZERO);
                continue;
            }
            let n = (TAU * m / (step * (1.0 - m * m))).ceil().max(3.0) as usize;
            for k in 0..n {
                points.push(Point::polar(m, TAU * k as f64 / n as f64));
            }
        }
        Ok(ProbeSet {
            points,
            description: format!("pseudo grid |z|<={max_modulus} density={density}"),
        })
    }

    /// Ring-lattice probes at `factor` times the density of `lattice`, with
    /// the rings restricted to `|z| <= max_modulus`.
    pub fn lattice_refinement(lattice: &RingLattice, factor: f64, max_modulus: f64) -> Result<Self> {
        let fine = RingLattice {
            q: lattice.q,
            scale: lattice.scale * factor,
            depth: lattice.depth,
            phase_seed: lattice.phase_seed.map(|s| s ^ 0x5eed),
        };
        let seq = generate_ring_lattice(&fine)?;
        let mut points = vec![Point::ZERO];
        points.extend(seq.points().iter().copied().filter(|p| p.abs() <= max_modulus));
        Ok(ProbeSet {
            points,
            description: format!(
                "ring lattice q={} scale={} |z|<={max_modulus}",
                fine.q, fine.scale
            ),
        })
    }

    /// Adds the sequence points with modulus at most `max_modulus`.
    pub fn with_sequence(mut self, seq: &PointSequence, max_modulus: f64) -> Self {
        self.points
            .extend(seq.points().iter().copied().filter(|p| p.abs() <= max_modulus));
        self.description.push_str(" + sequence points");
        self
    }
}

/// `max_z min_lambda rho(z, lambda)` over a pseudo grid of `|z| <= modulus`.
pub fn covering_radius(seq: &PointSequence, probe_region_modulus: f64, grid_density: u32) -> Result<f64> {
    let probes = ProbeSet::pseudo_grid(probe_region_modulus, grid_density)?;
    covering_radius_at(seq, &probes)
}

pub fn covering_radius_at(seq: &PointSequence, probes: &ProbeSet) -> Result<f64> {
    if seq.is_empty() {
        return Err(invalid("covering radius of an empty sequence"));
    }
    Ok(probes
        .points
        .par_iter()
        .map(|&z| seq.nearest_pseudo(z).map(|(_, d)| d).unwrap_or(1.0))
        .reduce(|| 0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMode {
    Lower,
    Upper,
}

impl std::str::FromStr for DensityMode {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(DensityMode::Lower),
            "upper" => Ok(DensityMode::Upper),
            other => Err(invalid(format!("density mode must be lower|upper, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub mode: DensityMode,
    pub r_values: Vec<f64>,
    pub lower_curve: Vec<f64>,
    pub upper_curve: Vec<f64>,
    /// Per r: number of probes whose disk `D(z, r)` reaches past the outermost
    /// sequence point.
    pub truncated_probes: Vec<usize>,
    pub truncation_dominated: Vec<bool>,
    /// Curve value at the largest r for the requested mode.
    pub final_value: f64,
    pub n_probes: usize,
    pub grid_spec: String,
}

/// `sum_{rho(lambda,z) <= r} (1 - rho(lambda,z)) / log(1/(1-r))`.
pub fn density_sum(seq: &PointSequence, z: Point, r: f64) -> f64 {
    seq.within_pseudo(z, r + TIE_TOLERANCE)
        .into_iter()
        .map(|(_, d)| 1.0 - d)
        .sum::<f64>()
        / (1.0 / (1.0 - r)).ln()
}

/// True when `D(z, r)` extends beyond the modulus of the outermost point.
pub fn is_truncated(seq: &PointSequence, z: Point, r: f64) -> bool {
    let e = pseudo_to_euclidean(PseudoDisk { center: z, radius: r });
    e.center.abs() + e.radius > seq.max_modulus()
}

pub fn uniform_density(
    seq: &PointSequence,
    r_values: &[f64],
    probes: &ProbeSet,
    mode: DensityMode,
) -> Result<DensityEstimate> {
    if probes.points.is_empty() {
        return Err(invalid("uniform density needs at least one probe"));
    }
    for &r in r_values {
        if !(r > 0.0 && r < 1.0) {
            return Err(invalid(format!("r values must lie in (0,1), got {r}")));
        }
    }
    let mut lower_curve = Vec::with_capacity(r_values.len());
    let mut upper_curve = Vec::with_capacity(r_values.len());
    let mut truncated_probes = Vec::with_capacity(r_values.len());
    for &r in r_values {
        let vals: Vec<(f64, bool)> = probes
            .points
            .par_iter()
            .map(|&z| (density_sum(seq, z, r), is_truncated(seq, z, r)))
            .collect();
        lower_curve.push(vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min));
        upper_curve.push(vals.iter().map(|v| v.0).fold(0.0, f64::max));
        truncated_probes.push(vals.iter().filter(|v| v.1).count());
    }
    let last = r_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i);
    let final_value = match (last, mode) {
        (Some(i), DensityMode::Lower) => lower_curve[i],
        (Some(i), DensityMode::Upper) => upper_curve[i],
        (None, _) => 0.0,
    };
    Ok(DensityEstimate {
        mode,
        r_values: r_values.to_vec(),
        truncation_dominated: truncated_probes.iter().map(|&n| n > 0).collect(),
        lower_curve,
        upper_curve,
        truncated_probes,
        final_value,
        n_probes: probes.points.len(),
        grid_spec: probes.description.clone(),
    })
}
