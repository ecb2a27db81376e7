//! Champagne domains: the unit disk minus finitely many disjoint closed
//! bubbles, plus the decay criterion for the radius profile.

pub mod criterion;
pub mod profile;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hyperbolic::{
    euclidean_to_pseudo, mobius_apply, pseudo_to_euclidean, rho_unchecked, EuclideanDisk, Point,
    PseudoDisk,
};
use crate::sequences::{separation, PointSequence, TIE_TOLERANCE};
use crate::spatial::DiskIndex;

pub use criterion::{criterion_integral, criterion_sum, Classification, CriterionMethod, CriterionReport};
pub use profile::RadiusProfile;

/// Bubbles whose radius is below this fraction of their isolation radius are
/// absorbed analytically by the walker instead of through the epsilon shell.
pub const TINY_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub disk: EuclideanDisk,
    pub pseudo: PseudoDisk,
    pub source_index: usize,
}

/// A boundary component of a champagne domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Exterior,
    Bubble(usize),
    /// Reserved for truncated families; walks are never short-circuited, so
    /// the walker itself does not produce it.
    TruncationShell,
}

/// Rule for the pseudohyperbolic bubble radius `delta(r)` of `Omega(z, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeltaRule {
    OneMinusR,
    /// Piecewise linear in r through `(r, delta)` knots, constant outside.
    Table { knots: Vec<(f64, f64)> },
}

impl DeltaRule {
    pub fn eval(&self, r: f64) -> Result<f64> {
        let d = match self {
            DeltaRule::OneMinusR => 1.0 - r,
            DeltaRule::Table { knots } => {
                let first = knots.first().ok_or_else(|| invalid("delta table is empty"))?;
                let last = knots.last().expect("nonempty");
                if r <= first.0 {
                    first.1
                } else if r >= last.0 {
                    last.1
                } else {
                    let i = knots.windows(2).position(|w| r <= w[1].0).expect("bracketed");
                    let ((r0, d0), (r1, d1)) = (knots[i], knots[i + 1]);
                    d0 + (d1 - d0) * (r - r0) / (r1 - r0)
                }
            }
        };
        if !(d > 0.0 && d < 1.0) {
            return Err(invalid(format!("delta({r}) = {d} is not in (0,1)")));
        }
        Ok(d)
    }

    /// Parses `one-minus-r` or `table:<path>` with `r,delta` rows.
    pub fn parse(spec: &str) -> Result<Self> {
        let rule = match spec {
            "one-minus-r" => DeltaRule::OneMinusR,
            _ => match spec.strip_prefix("table:") {
                Some(path) => DeltaRule::Table {
                    knots: profile::read_table(std::path::Path::new(path))?,
                },
                None => return Err(Error::Parse(format!("delta rule must be one-minus-r or table:<path>, got `{spec}`"))),
            },
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if let DeltaRule::Table { knots } = self {
            if knots.is_empty() {
                return Err(invalid("delta table is empty"));
            }
            for w in knots.windows(2) {
                if !(w[1].0 > w[0].0) || w[1].1 > w[0].1 {
                    return Err(invalid("delta table must be increasing in r and nonincreasing in delta"));
                }
            }
        }
        Ok(())
    }
}

/// The unit disk (or a smaller concentric disk) minus disjoint closed bubbles.
#[derive(Debug, Clone)]
pub struct ChampagneDomain {
    bubbles: Vec<Bubble>,
    outer_radius: f64,
    truncation_r: f64,
    profile_spec: Option<String>,
    tail_sum: Option<f64>,
    index: DiskIndex,
    /// Distance from each bubble center to the rest of the boundary.
    isolation: Vec<f64>,
    tiny: Vec<bool>,
}

impl ChampagneDomain {
    /// Validates containment and pairwise disjointness of the closed bubbles.
    pub fn new(bubbles: Vec<Bubble>, outer_radius: f64, truncation_r: f64) -> Result<Self> {
        if !(outer_radius > 0.0 && outer_radius <= 1.0) {
            return Err(invalid(format!("outer radius must lie in (0,1], got {outer_radius}")));
        }
        for b in &bubbles {
            if b.disk.center.abs() + b.disk.radius >= outer_radius {
                return Err(Error::BubbleOutside {
                    source_index: b.source_index,
                });
            }
        }
        let index = DiskIndex::build(bubbles.iter().map(|b| (b.disk.center, b.disk.radius)));
        let mut isolation = Vec::with_capacity(bubbles.len());
        let mut tiny = Vec::with_capacity(bubbles.len());
        for (k, b) in bubbles.iter().enumerate() {
            let mut iso = outer_radius - b.disk.center.abs();
            if let Some(n) = index.nearest_below(b.disk.center, f64::INFINITY, Some(k)) {
                if n.gap <= b.disk.radius {
                    let (s1, s2) = (b.source_index, bubbles[n.index].source_index);
                    return Err(Error::Overlap {
                        first: s1.min(s2),
                        second: s1.max(s2),
                    });
                }
                iso = iso.min(n.gap);
            }
            isolation.push(iso);
            tiny.push(b.disk.radius < TINY_RATIO * iso);
        }
        Ok(ChampagneDomain {
            bubbles,
            outer_radius,
            truncation_r,
            profile_spec: None,
            tail_sum: None,
            index,
            isolation,
            tiny,
        })
    }

    pub fn empty() -> Self {
        ChampagneDomain::new(vec![], 1.0, 1.0).expect("empty domain is valid")
    }

    /// Domain from Euclidean disks; pseudohyperbolic parameters are derived.
    pub fn from_disks(disks: &[(EuclideanDisk, usize)], truncation_r: f64) -> Result<Self> {
        let bubbles = disks
            .iter()
            .map(|&(disk, source_index)| {
                Ok(Bubble {
                    disk,
                    pseudo: euclidean_to_pseudo(disk)?,
                    source_index,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ChampagneDomain::new(bubbles, 1.0, truncation_r)
    }

    pub fn from_pseudo(disks: &[(PseudoDisk, usize)], truncation_r: f64) -> Result<Self> {
        let bubbles = disks
            .iter()
            .map(|&(pseudo, source_index)| Bubble {
                disk: pseudo_to_euclidean(pseudo),
                pseudo,
                source_index,
            })
            .collect();
        ChampagneDomain::new(bubbles, 1.0, truncation_r)
    }

    pub fn bubbles(&self) -> &[Bubble] {
        &self.bubbles
    }

    pub fn len(&self) -> usize {
        self.bubbles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bubbles.is_empty()
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn truncation_r(&self) -> f64 {
        self.truncation_r
    }

    pub fn profile_spec(&self) -> Option<&str> {
        self.profile_spec.as_deref()
    }

    pub fn set_profile_spec(&mut self, spec: Option<String>) {
        self.profile_spec = spec;
    }

    /// Estimated union-bound mass `sum log(1/|lambda|)/log(1/phi(|lambda|))`
    /// of the bubbles beyond the truncation, when built from a profile.
    pub fn tail_sum(&self) -> Option<f64> {
        self.tail_sum
    }

    pub fn circumference_sum(&self) -> f64 {
        self.bubbles.iter().map(|b| b.disk.circumference()).sum()
    }

    pub fn isolation(&self, k: usize) -> f64 {
        self.isolation[k]
    }

    pub fn is_tiny(&self, k: usize) -> bool {
        self.tiny[k]
    }

    /// Smallest radius among bubbles resolved through the epsilon shell.
    pub fn min_resolved_radius(&self) -> Option<f64> {
        self.bubbles
            .iter()
            .zip(&self.tiny)
            .filter(|(_, &t)| !t)
            .map(|(b, _)| b.disk.radius)
            .reduce(f64::min)
    }

    /// Default epsilon shell: `1e-3` times the smallest resolved radius.
    pub fn default_epsilon(&self) -> f64 {
        self.min_resolved_radius().map(|r| 1e-3 * r).unwrap_or(1e-6)
    }

    /// Distance to the nearest boundary component without validation.
    /// Ties go to the exterior, then to the lowest bubble index.
    #[inline]
    pub(crate) fn nearest_boundary(&self, z: Point) -> (f64, Component) {
        let ext = self.outer_radius - z.abs();
        match self.index.nearest_below(z, ext, None) {
            Some(n) => (n.gap, Component::Bubble(n.index)),
            None => (ext, Component::Exterior),
        }
    }

    /// `min(1 - |z|, min_k |z - c_k| - r_k)` with the nearest component.
    /// Fails unless `z` is strictly inside the domain.
    pub fn distance_to_boundary(&self, z: Point) -> Result<(f64, Component)> {
        if z.abs() >= self.outer_radius {
            return Err(Error::OutsideDisk {
                re: z.re,
                im: z.im,
                modulus: z.abs(),
            });
        }
        let (d, c) = self.nearest_boundary(z);
        if d <= 0.0 {
            let bubble = match c {
                Component::Bubble(k) => k,
                _ => 0,
            };
            return Err(Error::InsideBubble {
                re: z.re,
                im: z.im,
                bubble,
            });
        }
        Ok((d, c))
    }

    /// The image domain under the automorphism `phi_a`; bubble order and
    /// source indices are kept.
    pub fn transported(&self, a: Point) -> Result<Self> {
        if self.outer_radius != 1.0 {
            return Err(invalid("only domains in the full unit disk can be transported"));
        }
        let bubbles = self
            .bubbles
            .iter()
            .map(|b| {
                let pseudo = PseudoDisk::new(mobius_apply(a, b.pseudo.center)?, b.pseudo.radius)?;
                Ok(Bubble {
                    disk: pseudo_to_euclidean(pseudo),
                    pseudo,
                    source_index: b.source_index,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut d = ChampagneDomain::new(bubbles, 1.0, self.truncation_r)?;
        d.profile_spec = self.profile_spec.clone();
        d.tail_sum = self.tail_sum;
        Ok(d)
    }

    /// The sub-domain inside `|z| < outer_radius` keeping the bubbles picked
    /// by `keep`.
    pub fn restricted(&self, outer_radius: f64, keep: impl Fn(&Bubble) -> bool) -> Result<Self> {
        let bubbles = self.bubbles.iter().copied().filter(|b| keep(b)).collect();
        ChampagneDomain::new(bubbles, outer_radius, self.truncation_r)
    }
}

/// Bubbles `D(lambda, phi(|lambda|))` for every `|lambda| <= R`.
///
/// Every point in `starts` must lie outside the closed bubbles.
pub fn build_champagne(
    seq: &PointSequence,
    profile: &RadiusProfile,
    truncation_r: f64,
    starts: &[Point],
) -> Result<ChampagneDomain> {
    profile.validate()?;
    if !(truncation_r > 0.0 && truncation_r <= 1.0) {
        return Err(invalid(format!("truncation R must lie in (0,1], got {truncation_r}")));
    }
    let mut pseudo = Vec::new();
    let mut tail = 0.0;
    let mut beyond = false;
    for (i, &lambda) in seq.points().iter().enumerate() {
        let t = lambda.abs();
        if t > truncation_r + TIE_TOLERANCE {
            beyond = true;
            tail += union_term(profile, t)?;
            continue;
        }
        let r = profile
            .eval(t)
            .ok_or_else(|| invalid(format!("profile undefined at |lambda| = {t}")))?;
        if !(r > 0.0) {
            return Err(invalid(format!("profile underflows to 0 at |lambda| = {t}")));
        }
        pseudo.push((PseudoDisk::new(lambda, r)?, i));
    }
    let mut domain = ChampagneDomain::from_pseudo(&pseudo, truncation_r)?;
    for &z in starts {
        if let Err(Error::InsideBubble { bubble, .. }) = domain.distance_to_boundary(z) {
            return Err(Error::InsideBubble {
                re: z.re,
                im: z.im,
                bubble: domain.bubbles[bubble].source_index,
            });
        }
    }
    domain.tail_sum = if beyond || !seq.is_empty() {
        tail_extrapolation(seq, profile).map(|ext| tail + ext)
    } else {
        Some(0.0)
    };
    domain.profile_spec = Some(profile_spec_string(profile));
    Ok(domain)
}

fn union_term(profile: &RadiusProfile, t: f64) -> Result<f64> {
    let u = -(-t).ln_1p();
    let l = profile
        .neg_log_at_gap(u)
        .ok_or_else(|| invalid(format!("profile undefined at |lambda| = {t}")))?;
    Ok((1.0 / t).ln() / l)
}

/// Union-bound mass past the outermost point: the `log(1/|lambda|)` mass of the
/// outermost `log 2` of `u = log(1/(1-|lambda|))` sets a density per unit `u`,
/// which multiplies the criterion integral from half a shell further out.
fn tail_extrapolation(seq: &PointSequence, profile: &RadiusProfile) -> Option<f64> {
    let shell = std::f64::consts::LN_2;
    let u_of = |p: &Point| -(-p.abs()).ln_1p();
    let u_max = seq.points().iter().map(u_of).fold(f64::NEG_INFINITY, f64::max);
    if !u_max.is_finite() {
        return Some(0.0);
    }
    let mass: f64 = seq
        .points()
        .iter()
        .filter(|p| u_of(p) > u_max - shell)
        .map(|p| (1.0 / p.abs()).ln())
        .sum();
    criterion::integral_tail_from(profile, u_max + 0.5 * shell).map(|i| mass / shell * i)
}

pub fn profile_spec_string(profile: &RadiusProfile) -> String {
    match profile {
        RadiusProfile::Constant { c } => format!("const:{c}"),
        RadiusProfile::PowerLaw { c, gamma } => format!("power:{c},{gamma}"),
        RadiusProfile::ExpInverse { c, beta } => format!("expinv:{c},{beta}"),
        RadiusProfile::Table { knots } => format!("table:<{} knots>", knots.len()),
    }
}

/// Largest delta for which closed pseudodisks of radius delta around points at
/// mutual distance `sep` stay disjoint: `2 delta / (1 + delta^2) < sep`.
pub fn max_disjoint_delta(sep: f64) -> f64 {
    if sep >= 1.0 {
        return 1.0;
    }
    (1.0 - (1.0 - sep * sep).sqrt()) / sep
}

/// `Omega(z, r)`: bubbles `D(lambda, delta(r))` for `1/2 < rho(lambda, z) < r`,
/// in the original coordinates.
pub fn build_finitely_connected(
    seq: &PointSequence,
    z: Point,
    r: f64,
    delta: &DeltaRule,
) -> Result<ChampagneDomain> {
    z.check_in_disk()?;
    if !(r > 0.5 && r < 1.0) {
        return Err(invalid(format!("r must lie in (1/2, 1), got {r}")));
    }
    delta.validate()?;
    let d = delta.eval(r)?;
    let selected: Vec<usize> = seq
        .within_pseudo(z, r)
        .into_iter()
        .filter(|&(_, rho)| rho > 0.5 + TIE_TOLERANCE && rho < r - TIE_TOLERANCE)
        .map(|(i, _)| i)
        .collect();
    let pseudo = selected
        .iter()
        .map(|&i| Ok((PseudoDisk::new(seq.points()[i], d)?, i)))
        .collect::<Result<Vec<_>>>()?;
    match ChampagneDomain::from_pseudo(&pseudo, r) {
        Err(Error::Overlap { first, second }) => {
            let sub = PointSequence::new(selected.iter().map(|&i| seq.points()[i]).collect(), "selected")?;
            let sep = separation(&sub).value;
            let min_r = match delta {
                DeltaRule::OneMinusR => Some(1.0 - max_disjoint_delta(sep)),
                DeltaRule::Table { .. } => None,
            };
            Err(Error::Inadmissible { first, second, min_r })
        }
        other => other,
    }
}

/// Pseudohyperbolic center and radius of a bubble seen from `z0`:
/// `(rho(z0, lambda), s)`.
pub(crate) fn seen_from(b: &Bubble, z0: Point) -> (f64, f64) {
    (rho_unchecked(z0, b.pseudo.center), b.pseudo.radius)
}

/// On-disk form of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainFile {
    pub bubbles: Vec<BubbleRecord>,
    #[serde(rename = "truncation_R")]
    pub truncation_r: f64,
    pub profile_spec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_sum: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleRecord {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub source_index: usize,
}

impl From<&ChampagneDomain> for DomainFile {
    fn from(d: &ChampagneDomain) -> Self {
        DomainFile {
            bubbles: d
                .bubbles
                .iter()
                .map(|b| BubbleRecord {
                    cx: b.disk.center.re,
                    cy: b.disk.center.im,
                    radius: b.disk.radius,
                    source_index: b.source_index,
                })
                .collect(),
            truncation_r: d.truncation_r,
            profile_spec: d.profile_spec.clone(),
            tail_sum: d.tail_sum,
        }
    }
}

impl TryFrom<DomainFile> for ChampagneDomain {
    type Error = Error;
    fn try_from(f: DomainFile) -> Result<Self> {
        let disks = f
            .bubbles
            .iter()
            .map(|b| Ok((EuclideanDisk::new(Point::new(b.cx, b.cy), b.radius)?, b.source_index)))
            .collect::<Result<Vec<_>>>()?;
        let mut d = ChampagneDomain::from_disks(&disks, f.truncation_r)?;
        d.profile_spec = f.profile_spec;
        d.tail_sum = f.tail_sum;
        Ok(d)
    }
}
