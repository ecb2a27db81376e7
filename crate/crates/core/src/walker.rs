//! Walk-on-spheres estimation of harmonic measure in champagne domains.
//!
//! Away from the boundary each step jumps to a uniform point on the largest
//! circle around the walker that stays in the domain. Walks end in the
//! epsilon shell of the nearest component. Bubbles far smaller than their
//! isolation radius `L` are never resolved by the shell: inside `B(c, L/2)`
//! the walker instead draws the first exit from the annulus `s < |z-c| < L`
//! directly, which is capture with probability `log(L/|z-c|)/log(L/s)` and
//! otherwise a point on `|z-c| = L` from the conditioned exit law.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{seen_from, ChampagneDomain, Component};
use crate::error::{invalid, Error, Result};
use crate::hyperbolic::{ln_rho_unchecked, Point};
use crate::streams::{derive_seed, walk_stream, WalkRng};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;
/// Walks per work unit; tallies are merged unit by unit in index order.
const CHUNK: usize = 2048;
const Z95: f64 = 1.959_963_984_540_054;

/// `log|zeta| / log s`: harmonic measure at 0 of `dD(zeta, s)` in the disk
/// minus the closed pseudodisk `D(zeta, s)`.
pub fn one_hole_exact(zeta: Point, s: f64) -> Result<f64> {
    zeta.check_in_disk()?;
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!("bubble radius must lie in (0,1), got {s}")));
    }
    let m = zeta.abs();
    if m <= s {
        return Err(Error::InsideBubble {
            re: 0.0,
            im: 0.0,
            bubble: 0,
        });
    }
    Ok(m.ln() / s.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitEvent {
    pub component: Component,
    pub position: Point,
    pub steps: u64,
    pub path_length: f64,
}

/// Smallest radius among bubbles the epsilon shell has to resolve; `epsilon`
/// must stay below it.
pub fn check_epsilon(domain: &ChampagneDomain, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if let Some(r) = domain.min_resolved_radius() {
        if epsilon >= r {
            return Err(invalid(format!(
                "epsilon {epsilon} is not below the smallest resolved bubble radius {r}"
            )));
        }
    }
    Ok(())
}

/// One walk from `z0`. The caller guarantees `z0` is interior and `epsilon`
/// passed [`check_epsilon`].
pub fn wos_walk(
    domain: &ChampagneDomain,
    z0: Point,
    epsilon: f64,
    rng: &mut WalkRng,
    budget: u64,
) -> Result<ExitEvent> {
    let mut z = z0;
    let mut steps = 0u64;
    let mut path_length = 0.0;
    loop {
        let (d, comp) = domain.nearest_boundary(z);
        if let Component::Bubble(k) = comp {
            if domain.is_tiny(k) {
                let b = &domain.bubbles()[k];
                let l = domain.isolation(k);
                let offset = z - b.disk.center;
                let r0 = offset.abs();
                if r0 < 0.5 * l {
                    if steps >= budget {
                        return Err(Error::StepBudget { budget, re: z.re, im: z.im });
                    }
                    steps += 1;
                    match annulus_exit(offset, b.disk.radius, l, rng) {
                        None => {
                            path_length += r0 - b.disk.radius;
                            return Ok(ExitEvent {
                                component: comp,
                                position: b.disk.center + offset.scale(b.disk.radius / r0),
                                steps,
                                path_length,
                            });
                        }
                        Some(y) => {
                            path_length += (y - offset).abs();
                            z = b.disk.center + y;
                            continue;
                        }
                    }
                }
            }
        }
        if d < epsilon {
            return Ok(ExitEvent {
                component: comp,
                position: z,
                steps,
                path_length,
            });
        }
        if steps >= budget {
            return Err(Error::StepBudget { budget, re: z.re, im: z.im });
        }
        let theta = TAU * rng.random::<f64>();
        let (sin, cos) = theta.sin_cos();
        z = Point::new(z.re + d * cos, z.im + d * sin);
        steps += 1;
        path_length += d;
    }
}

/// First exit from `s < |w| < l` started at `offset`: `None` for capture by
/// the inner circle, otherwise the exit point on `|w| = l`.
fn annulus_exit(offset: Point, s: f64, l: f64, rng: &mut WalkRng) -> Option<Point> {
    let r0 = offset.abs();
    let p = (l / r0).ln() / (l / s).ln();
    if rng.random::<f64>() < p {
        return None;
    }
    // Poisson-kernel proposal on the unit circle, thinned by the mass that
    // reaches the (nearly pointlike) inner circle first.
    let w = offset.scale(1.0 / l);
    let denom = 1.0 - w.norm_sqr();
    loop {
        let (sin, cos) = (TAU * rng.random::<f64>()).sin_cos();
        let zeta = Point::new(cos, sin);
        let y = (zeta + w) / (Point::new(1.0, 0.0) + w.conj() * zeta);
        let accept = 1.0 - p * (y - w).norm_sqr() / denom;
        if rng.random::<f64>() < accept {
            let y = y.scale(1.0 / y.abs());
            return Some(y.scale(l));
        }
    }
}

/// Boundary set whose harmonic measure is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Exterior,
    Bubble(usize),
    AllBubbles,
}

impl std::str::FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exterior" => Ok(Target::Exterior),
            "all" => Ok(Target::AllBubbles),
            _ => s
                .strip_prefix("bubble:")
                .and_then(|k| k.parse().ok())
                .map(Target::Bubble)
                .ok_or_else(|| Error::Parse(format!("target must be exterior, all or bubble:<k>, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureEstimate {
    pub target: Target,
    pub n_walks: u64,
    pub hits_exterior: u64,
    /// Hits per bubble index, only for bubbles that were hit.
    pub hits_per_bubble: BTreeMap<usize, u64>,
    pub hits_truncation: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub total_steps: u64,
    pub mean_steps: f64,
    /// Bin 0 holds walks of zero steps, bin `b >= 1` walks with
    /// `2^(b-1) <= steps < 2^b`.
    pub steps_histogram: Vec<u64>,
    pub mean_path_length: f64,
    /// Union-bound mass of the bubbles dropped by truncation, when known.
    pub tail_sum: Option<f64>,
}

impl MeasureEstimate {
    pub fn hits_bubbles(&self) -> u64 {
        self.hits_per_bubble.values().sum()
    }

    /// Fraction of walks ending on component `c`.
    pub fn fraction(&self, c: Component) -> f64 {
        let hits = match c {
            Component::Exterior => self.hits_exterior,
            Component::Bubble(k) => self.hits_per_bubble.get(&k).copied().unwrap_or(0),
            Component::TruncationShell => self.hits_truncation,
        };
        hits as f64 / self.n_walks as f64
    }

    /// `3 sqrt(p(1-p)/n)` at the point estimate.
    pub fn three_sigma(&self) -> f64 {
        three_sigma(self.estimate, self.n_walks)
    }
}

pub fn three_sigma(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Wilson score interval at 95%.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McParams {
    pub n_walks: u64,
    /// `None` picks [`ChampagneDomain::default_epsilon`].
    pub epsilon: Option<f64>,
    pub seed: u64,
    /// 0 means the global pool.
    pub threads: usize,
    pub step_budget: u64,
}

impl McParams {
    pub fn new(n_walks: u64, seed: u64) -> Self {
        McParams {
            n_walks,
            epsilon: None,
            seed,
            threads: 0,
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }
}

#[derive(Default)]
struct Tally {
    exterior: u64,
    truncation: u64,
    bubbles: BTreeMap<usize, u64>,
    steps: u64,
    histogram: Vec<u64>,
    path: f64,
    failed: usize,
    first_error: Option<Error>,
}

impl Tally {
    fn record(&mut self, ev: &ExitEvent) {
        match ev.component {
            Component::Exterior => self.exterior += 1,
            Component::TruncationShell => self.truncation += 1,
            Component::Bubble(k) => *self.bubbles.entry(k).or_insert(0) += 1,
        }
        self.steps += ev.steps;
        let bin = (u64::BITS - ev.steps.leading_zeros()) as usize;
        if self.histogram.len() <= bin {
            self.histogram.resize(bin + 1, 0);
        }
        self.histogram[bin] += 1;
        self.path += ev.path_length;
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.exterior += other.exterior;
        self.truncation += other.truncation;
        for (k, v) in other.bubbles {
            *self.bubbles.entry(k).or_insert(0) += v;
        }
        self.steps += other.steps;
        if self.histogram.len() < other.histogram.len() {
            self.histogram.resize(other.histogram.len(), 0);
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        self.path += other.path;
        self.failed += other.failed;
        if self.first_error.is_none() {
            self.first_error = other.first_error;
        }
        self
    }
}

/// Runs `f` inside a pool of `threads` workers, or the global pool for 0.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `n_walks` independent walks from `z0`; walk `i` uses stream `(seed, i)`.
pub fn estimate_measure(
    domain: &ChampagneDomain,
    z0: Point,
    target: Target,
    params: &McParams,
) -> Result<MeasureEstimate> {
    if params.n_walks == 0 {
        return Err(invalid("n_walks must be positive"));
    }
    if let Target::Bubble(k) = target {
        if k >= domain.len() {
            return Err(invalid(format!("bubble {k} does not exist ({} bubbles)", domain.len())));
        }
    }
    let epsilon = params.epsilon.unwrap_or_else(|| domain.default_epsilon());
    check_epsilon(domain, epsilon)?;
    domain.distance_to_boundary(z0)?;

    let n = params.n_walks;
    let chunks = n.div_ceil(CHUNK as u64);
    let run_chunk = |c: u64| {
        let mut t = Tally::default();
        for i in c * CHUNK as u64..((c + 1) * CHUNK as u64).min(n) {
            let mut rng = walk_stream(params.seed, i);
            match wos_walk(domain, z0, epsilon, &mut rng, params.step_budget) {
                Ok(ev) => t.record(&ev),
                Err(e) => {
                    t.failed += 1;
                    if t.first_error.is_none() {
                        t.first_error = Some(e);
                    }
                }
            }
        }
        t
    };
    let tallies: Vec<Tally> = with_threads(params.threads, || (0..chunks).into_par_iter().map(run_chunk).collect())?;
    let tally = tallies.into_iter().fold(Tally::default(), Tally::merge);
    if tally.failed > 0 {
        return Err(Error::Walks {
            failed: tally.failed,
            total: n as usize,
            first: Box::new(tally.first_error.expect("failure recorded")),
        });
    }
    let hits = match target {
        Target::Exterior => tally.exterior,
        Target::Bubble(k) => tally.bubbles.get(&k).copied().unwrap_or(0),
        Target::AllBubbles => tally.bubbles.values().sum(),
    };
    let (ci_low, ci_high) = wilson_interval(hits, n);
    Ok(MeasureEstimate {
        target,
        n_walks: n,
        hits_exterior: tally.exterior,
        hits_per_bubble: tally.bubbles,
        hits_truncation: tally.truncation,
        estimate: hits as f64 / n as f64,
        ci_low,
        ci_high,
        epsilon,
        seed: params.seed,
        total_steps: tally.steps,
        mean_steps: tally.steps as f64 / n as f64,
        steps_histogram: tally.histogram,
        mean_path_length: tally.path / n as f64,
        tail_sum: domain.tail_sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleHoleTerm {
    pub bubble: usize,
    pub source_index: usize,
    /// `log(1/rho(z0, lambda)) / log(1/s)`, the bubble's one-hole measure.
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichBounds {
    pub lower_union: f64,
    pub upper_single: f64,
    pub term_sum: f64,
    pub components: Vec<SingleHoleTerm>,
}

/// Deterministic bounds on the exterior measure at `z0`: the union bound from
/// below and the best single-bubble domain from above.
pub fn sandwich_bounds(domain: &ChampagneDomain, z0: Point) -> Result<SandwichBounds> {
    domain.distance_to_boundary(z0)?;
    let components: Vec<SingleHoleTerm> = domain
        .bubbles()
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let (_, s) = seen_from(b, z0);
            SingleHoleTerm {
                bubble: k,
                source_index: b.source_index,
                term: ln_rho_unchecked(z0, b.pseudo.center) / s.ln(),
            }
        })
        .collect();
    let term_sum: f64 = components.iter().map(|c| c.term).sum();
    let upper_single = components.iter().map(|c| 1.0 - c.term).fold(1.0, f64::min);
    Ok(SandwichBounds {
        lower_union: (1.0 - term_sum).max(0.0),
        upper_single,
        term_sum,
        components,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEstimate {
    pub j: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub n_bubbles: usize,
    /// Largest crossing fraction over the start grid.
    pub q_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub argmax_start: Point,
    /// Starts that lie in a closed bubble and count as crossing fraction 0.
    pub blocked_starts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredCrossing {
    pub k: f64,
    pub layers: Vec<LayerEstimate>,
    pub product: f64,
    pub complement_sum: f64,
    pub convention: String,
}

pub const LAYER_CONVENTION: &str = "layer j keeps the bubbles whose closure lies in |z| < C_j and meets |z| > C_(j-1); \
reaching C_j counts as crossing; starts are an angular grid on C_(j-1) at angles 2 pi (i + 1/2) / m, C_0 being the origin";

/// Crossing fractions `Q_j` between the circles `C_j = {|z| = 1 - K^-j}`.
pub fn layered_crossing(
    domain: &ChampagneDomain,
    k: f64,
    j_max: usize,
    grid_points: usize,
    params: &McParams,
) -> Result<LayeredCrossing> {
    if !(k > 1.0) {
        return Err(invalid(format!("K must exceed 1, got {k}")));
    }
    if grid_points < 8 {
        return Err(invalid(format!("at least 8 grid points per circle are needed, got {grid_points}")));
    }
    if j_max == 0 {
        return Err(invalid("j_max must be at least 1"));
    }
    let c = |j: usize| 1.0 - k.powi(-(j as i32));
    if domain.truncation_r() < c(j_max) {
        return Err(invalid(format!(
            "truncation R = {} does not cover C_{j_max} = {}",
            domain.truncation_r(),
            c(j_max)
        )));
    }
    let mut layers = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let (inner, outer) = (c(j - 1), c(j));
        let sub = domain.restricted(outer, |b| {
            let edge = b.disk.center.abs() + b.disk.radius;
            edge < outer && edge > inner
        })?;
        let starts: Vec<Point> = if j == 1 {
            vec![Point::ZERO]
        } else {
            (0..grid_points)
                .map(|i| Point::polar(inner, TAU * (i as f64 + 0.5) / grid_points as f64))
                .collect()
        };
        let mut best: Option<(f64, f64, f64, Point)> = None;
        let mut blocked = 0;
        for (i, &z) in starts.iter().enumerate() {
            let (q, lo, hi) = if sub.distance_to_boundary(z).is_err() {
                blocked += 1;
                (0.0, 0.0, 0.0)
            } else {
                let p = McParams {
                    seed: derive_seed(params.seed, &[j as u64, i as u64]),
                    ..*params
                };
                let est = estimate_measure(&sub, z, Target::Exterior, &p)?;
                (est.estimate, est.ci_low, est.ci_high)
            };
            if best.is_none_or(|b| q > b.0) {
                best = Some((q, lo, hi, z));
            }
        }
        let (q_hat, ci_low, ci_high, argmax_start) = best.expect("at least one start");
        layers.push(LayerEstimate {
            j,
            inner_radius: inner,
            outer_radius: outer,
            n_bubbles: sub.len(),
            q_hat,
            ci_low,
            ci_high,
            argmax_start,
            blocked_starts: blocked,
        });
    }
    Ok(LayeredCrossing {
        k,
        product: layers.iter().map(|l| l.q_hat).product(),
        complement_sum: layers.iter().map(|l| 1.0 - l.q_hat).sum(),
        layers,
        convention: LAYER_CONVENTION.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{pseudo_to_euclidean, EuclideanDisk, PseudoDisk};
    use approx::assert_relative_eq;

    fn one_bubble(zeta: Point, s: f64) -> ChampagneDomain {
        ChampagneDomain::from_pseudo(&[(PseudoDisk::new(zeta, s).unwrap(), 0)], 1.0).unwrap()
    }

    #[test]
    fn one_hole_examples() {
        assert_relative_eq!(one_hole_exact(Point::new(0.5, 0.0), 0.25).unwrap(), 0.5, epsilon = 1e-15);
        let m: f64 = 0.6;
        for k in 2..5 {
            assert_relative_eq!(one_hole_exact(Point::new(m, 0.0), m.powi(k)).unwrap(), 1.0 / k as f64, epsilon = 1e-14);
        }
        assert_relative_eq!(
            one_hole_exact(Point::new(0.0, 0.8), 0.1).unwrap(),
            0.8f64.ln() / 0.1f64.ln(),
            epsilon = 1e-15
        );
        assert!(one_hole_exact(Point::new(0.2, 0.0), 0.25).is_err());
    }

    #[test]
    fn empty_domain_walks_exit_outside() {
        let d = ChampagneDomain::empty();
        let mut rng = walk_stream(1, 0);
        for _ in 0..100 {
            let ev = wos_walk(&d, Point::new(0.3, -0.2), 1e-6, &mut rng, DEFAULT_STEP_BUDGET).unwrap();
            assert_eq!(ev.component, Component::Exterior);
            assert!(1.0 - ev.position.abs() < 1e-6);
            assert!(ev.steps >= 1);
        }
    }

    #[test]
    fn start_in_shell_exits_immediately() {
        let d = one_bubble(Point::new(0.5, 0.0), 0.25);
        let disk = d.bubbles()[0].disk;
        let z = disk.center + (disk.boundary_point(1.0) - disk.center).scale(1.0 + 1e-9 / disk.radius);
        let mut rng = walk_stream(1, 0);
        let ev = wos_walk(&d, z, 1e-6, &mut rng, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(ev.component, Component::Bubble(0));
        assert_eq!(ev.steps, 0);
    }

    #[test]
    fn mean_step_count_on_empty_disk_is_logarithmic() {
        let d = ChampagneDomain::empty();
        // from the center the first jump lands on the circle
        let est = estimate_measure(&d, Point::ZERO, Target::Exterior, &McParams::new(100, 3).with_epsilon(1e-6)).unwrap();
        assert_eq!(est.mean_steps, 1.0);
        let est = estimate_measure(&d, Point::new(0.5, 0.0), Target::Exterior, &McParams::new(10_000, 3).with_epsilon(1e-6)).unwrap();
        assert_eq!(est.estimate, 1.0);
        assert!(est.mean_steps > 5.0 && est.mean_steps < 60.0, "{}", est.mean_steps);
    }

    #[test]
    fn one_bubble_matches_closed_form() {
        let d = one_bubble(Point::new(0.5, 0.0), 0.25);
        let p = McParams::new(40_000, 11).with_epsilon(1e-6);
        let bubble = estimate_measure(&d, Point::ZERO, Target::Bubble(0), &p).unwrap();
        let ext = estimate_measure(&d, Point::ZERO, Target::Exterior, &p).unwrap();
        assert!((bubble.estimate - 0.5).abs() <= bubble.three_sigma());
        assert_eq!(bubble.hits_bubbles() + ext.hits_exterior, p.n_walks);
        assert_eq!(bubble.estimate + ext.estimate, 1.0);
        assert!(bubble.ci_low <= bubble.estimate && bubble.estimate <= bubble.ci_high);
    }

    #[test]
    fn concentric_bubble_annulus() {
        let disk = EuclideanDisk::new(Point::ZERO, 0.1).unwrap();
        let d = ChampagneDomain::from_disks(&[(disk, 0)], 1.0).unwrap();
        let est = estimate_measure(&d, Point::new(0.5, 0.0), Target::Exterior, &McParams::new(40_000, 5).with_epsilon(1e-6)).unwrap();
        let exact = 1.0 - 0.5f64.ln() / 0.1f64.ln();
        assert_relative_eq!(exact, 0.698_97, epsilon = 1e-5);
        assert!((est.estimate - exact).abs() <= est.three_sigma());
    }

    #[test]
    fn tiny_bubble_uses_exact_capture() {
        // a bubble far below any usable epsilon still gets its one-hole measure
        let zeta = Point::new(0.3, 0.0);
        let s = 1e-40;
        let d = one_bubble(zeta, s);
        assert!(d.is_tiny(0));
        let est = estimate_measure(&d, Point::ZERO, Target::Bubble(0), &McParams::new(200_000, 2).with_epsilon(1e-6)).unwrap();
        let exact = one_hole_exact(zeta, s).unwrap();
        assert!((est.estimate - exact).abs() <= est.three_sigma().max(2e-3), "{} vs {exact}", est.estimate);

        let s = 1e-8;
        let d = one_bubble(zeta, s);
        let est = estimate_measure(&d, Point::ZERO, Target::Bubble(0), &McParams::new(100_000, 4).with_epsilon(1e-6)).unwrap();
        let exact = one_hole_exact(zeta, s).unwrap();
        assert!((est.estimate - exact).abs() <= est.three_sigma(), "{} vs {exact}", est.estimate);
    }

    #[test]
    fn annulus_exit_law_is_rotation_consistent() {
        // from the center the conditioned exit point is uniform on the circle
        let mut rng = walk_stream(9, 0);
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0);
        for _ in 0..20_000 {
            if let Some(y) = annulus_exit(Point::new(1e-3, 0.0), 1e-12, 1.0, &mut rng) {
                assert_relative_eq!(y.abs(), 1.0, epsilon = 1e-12);
                sx += y.re;
                sy += y.im;
                n += 1;
            }
        }
        assert!((sx / n as f64).abs() < 0.03 && (sy / n as f64).abs() < 0.03);
    }

    #[test]
    fn determinism_across_thread_counts() {
        let d = ChampagneDomain::from_pseudo(
            &[
                (PseudoDisk::new(Point::new(0.5, 0.0), 0.2).unwrap(), 0),
                (PseudoDisk::new(Point::new(-0.4, 0.4), 0.1).unwrap(), 1),
            ],
            1.0,
        )
        .unwrap();
        let base = McParams::new(10_000, 77).with_epsilon(1e-6);
        let a = estimate_measure(&d, Point::ZERO, Target::Exterior, &base.with_threads(1)).unwrap();
        let b = estimate_measure(&d, Point::ZERO, Target::Exterior, &base.with_threads(3)).unwrap();
        let c = estimate_measure(&d, Point::ZERO, Target::Exterior, &base).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn epsilon_and_start_validation() {
        let d = one_bubble(Point::new(0.5, 0.0), 0.25);
        let r = d.bubbles()[0].disk.radius;
        let p = McParams::new(10, 1).with_epsilon(r);
        assert!(estimate_measure(&d, Point::ZERO, Target::Exterior, &p).is_err());
        let p = McParams::new(10, 1).with_epsilon(1e-6);
        assert!(estimate_measure(&d, Point::new(0.5, 0.0), Target::Exterior, &p).is_err());
        assert!(estimate_measure(&d, Point::new(0.0, 0.0), Target::Bubble(3), &p).is_err());
    }

    #[test]
    fn step_budget_is_an_error() {
        let d = ChampagneDomain::empty();
        let p = McParams {
            step_budget: 2,
            ..McParams::new(5, 1).with_epsilon(1e-9)
        };
        match estimate_measure(&d, Point::new(0.3, 0.0), Target::Exterior, &p) {
            Err(Error::Walks { failed, total, first }) => {
                assert_eq!(total, 5);
                assert!(failed > 0);
                assert!(matches!(*first, Error::StepBudget { budget: 2, .. }));
            }
            other => panic!("expected walk failures, got {other:?}"),
        }
    }

    #[test]
    fn wilson_interval_brackets() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert_relative_eq!(0.5 - lo, hi - 0.5, epsilon = 1e-12);
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }

    #[test]
    fn sandwich_examples() {
        let d = one_bubble(Point::new(0.5, 0.0), 0.25);
        let s = sandwich_bounds(&d, Point::ZERO).unwrap();
        assert_relative_eq!(s.lower_union, 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.upper_single, 0.5, epsilon = 1e-15);

        // single-hole terms 0.3 and 0.2 on opposite sides
        let s1: f64 = 0.01;
        let m1 = s1.powf(0.3);
        let m2 = s1.powf(0.2);
        let d = ChampagneDomain::from_pseudo(
            &[
                (PseudoDisk::new(Point::new(m1, 0.0), s1).unwrap(), 0),
                (PseudoDisk::new(Point::new(-m2, 0.0), s1).unwrap(), 1),
            ],
            1.0,
        )
        .unwrap();
        let s = sandwich_bounds(&d, Point::ZERO).unwrap();
        assert_relative_eq!(s.lower_union, 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.upper_single, 0.7, epsilon = 1e-12);

        let big: Vec<(PseudoDisk, usize)> = (0..6)
            .map(|i| (PseudoDisk::new(Point::polar(0.5, i as f64), 0.2).unwrap(), i))
            .collect();
        let d = ChampagneDomain::from_pseudo(&big, 1.0).unwrap();
        let s = sandwich_bounds(&d, Point::ZERO).unwrap();
        assert!(s.term_sum >= 1.0);
        assert_eq!(s.lower_union, 0.0);
    }

    #[test]
    fn sandwich_is_invariant_under_transport() {
        let d = ChampagneDomain::from_pseudo(
            &[
                (PseudoDisk::new(Point::new(0.5, 0.1), 0.2).unwrap(), 0),
                (PseudoDisk::new(Point::new(-0.3, -0.6), 0.1).unwrap(), 1),
            ],
            1.0,
        )
        .unwrap();
        let z0 = Point::new(0.1, 0.4);
        let direct = sandwich_bounds(&d, z0).unwrap();
        let moved = sandwich_bounds(&d.transported(z0).unwrap(), Point::ZERO).unwrap();
        assert_relative_eq!(direct.lower_union, moved.lower_union, epsilon = 1e-12);
        assert_relative_eq!(direct.upper_single, moved.upper_single, epsilon = 1e-12);
    }

    #[test]
    fn layered_crossing_examples() {
        let p = McParams::new(2_000, 8).with_epsilon(1e-6);
        let empty = ChampagneDomain::empty();
        let r = layered_crossing(&empty, 2.0, 3, 8, &p).unwrap();
        assert!(r.layers.iter().all(|l| l.q_hat == 1.0));
        assert!(layered_crossing(&empty, 2.0, 3, 7, &p).is_err());

        let disk = pseudo_to_euclidean(PseudoDisk::new(Point::new(0.25, 0.0), 0.1).unwrap());
        let d = ChampagneDomain::from_disks(&[(disk, 0)], 1.0).unwrap();
        let r = layered_crossing(&d, 2.0, 3, 8, &p).unwrap();
        assert_eq!(r.layers[0].n_bubbles, 1);
        assert!(r.layers[0].q_hat < 1.0);
        assert!(r.layers[1..].iter().all(|l| l.q_hat == 1.0));
        assert!(r.product < 1.0 && r.complement_sum > 0.0);
    }

    #[test]
    fn target_parsing() {
        assert_eq!("exterior".parse::<Target>().unwrap(), Target::Exterior);
        assert_eq!("all".parse::<Target>().unwrap(), Target::AllBubbles);
        assert_eq!("bubble:3".parse::<Target>().unwrap(), Target::Bubble(3));
        assert!("bubble:x".parse::<Target>().is_err());
    }
}
