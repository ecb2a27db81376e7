//! Harmonic-measure densities: `log(1/omega(z, dD, Omega(z, r)))` over probes,
//! with `Omega(z, r)` built from the bubbles `D(lambda, 1 - r)` for
//! `1/2 < rho(z, lambda) < r`, set next to the uniform densities.

use serde::{Deserialize, Serialize};

use crate::domains::{build_finitely_connected, DeltaRule};
use crate::error::{invalid, Result};
use crate::hyperbolic::Point;
use crate::sequences::{uniform_density, DensityEstimate, DensityMode, PointSequence, ProbeSet};
use crate::streams::derive_seed;
use crate::walker::{estimate_measure, McParams, Target};

pub const PILOT_WALKS: u64 = 1_000;
pub const MAX_WALKS_PER_PROBE: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMc {
    /// Target walk count at `omega = 1`; the per-probe budget is this divided
    /// by the pilot estimate of `omega`.
    pub n_walks: u64,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub threads: usize,
    pub pilot_walks: u64,
    pub max_walks: u64,
}

impl HarmonicMc {
    pub fn new(n_walks: u64, seed: u64) -> Self {
        HarmonicMc {
            n_walks,
            epsilon: None,
            seed,
            threads: 0,
            pilot_walks: PILOT_WALKS,
            max_walks: MAX_WALKS_PER_PROBE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub z: Point,
    pub n_bubbles: usize,
    pub n_walks: u64,
    pub hits_exterior: u64,
    pub omega_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `log(1/omega_hat)`; `None` when no walk reached the unit circle.
    pub log_inv: Option<f64>,
    pub log_inv_low: f64,
    /// `None` when the interval reaches `omega = 0`.
    pub log_inv_high: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicLayer {
    pub r: f64,
    /// Inf (lower) or sup (upper) of `log_inv`; `None` stands for `+inf`.
    pub value: Option<f64>,
    pub value_low: f64,
    pub value_high: Option<f64>,
    pub unbounded_probes: usize,
    pub warning: Option<String>,
    pub probes: Vec<ProbeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicDensityCurve {
    pub mode: DensityMode,
    pub r_values: Vec<f64>,
    pub per_r: Vec<HarmonicLayer>,
    pub probe_spec: String,
}

impl HarmonicDensityCurve {
    pub fn values(&self) -> Vec<Option<f64>> {
        self.per_r.iter().map(|l| l.value).collect()
    }
}

/// Harmonic-density curve. Lower mode probes `probes`; upper mode probes the
/// sequence points of modulus at most `upper_max_modulus`.
pub fn harmonic_density_curve(
    seq: &PointSequence,
    r_values: &[f64],
    mode: DensityMode,
    probes: &ProbeSet,
    upper_max_modulus: f64,
    mc: &HarmonicMc,
) -> Result<HarmonicDensityCurve> {
    if mc.n_walks == 0 || mc.pilot_walks == 0 {
        return Err(invalid("walk counts must be positive"));
    }
    let (points, probe_spec) = match mode {
        DensityMode::Lower => (probes.points.clone(), probes.description.clone()),
        DensityMode::Upper => (
            seq.points().iter().copied().filter(|p| p.abs() <= upper_max_modulus).collect(),
            format!("sequence points |lambda|<={upper_max_modulus}"),
        ),
    };
    if points.is_empty() {
        return Err(invalid("no probes"));
    }
    let mut per_r = Vec::with_capacity(r_values.len());
    for (ri, &r) in r_values.iter().enumerate() {
        let mut records = Vec::with_capacity(points.len());
        for (pi, &z) in points.iter().enumerate() {
            let seed = derive_seed(mc.seed, &[ri as u64, pi as u64, mode as u64]);
            records.push(probe(seq, z, r, mc, seed)?);
        }
        per_r.push(summarize(r, mode, records));
    }
    Ok(HarmonicDensityCurve {
        mode,
        r_values: r_values.to_vec(),
        per_r,
        probe_spec,
    })
}

fn probe(seq: &PointSequence, z: Point, r: f64, mc: &HarmonicMc, seed: u64) -> Result<ProbeRecord> {
    let domain = build_finitely_connected(seq, z, r, &DeltaRule::OneMinusR)?.transported(z)?;
    let params = |n: u64, s: u64| McParams {
        epsilon: mc.epsilon,
        threads: mc.threads,
        ..McParams::new(n, s)
    };
    let n_walks = if domain.is_empty() {
        mc.n_walks.min(mc.max_walks)
    } else {
        let pilot = estimate_measure(&domain, Point::ZERO, Target::Exterior, &params(mc.pilot_walks, derive_seed(seed, &[0])))?;
        if pilot.estimate > 0.0 {
            ((mc.n_walks as f64 / pilot.estimate).ceil() as u64).clamp(1, mc.max_walks)
        } else {
            mc.max_walks
        }
    };
    let est = estimate_measure(&domain, Point::ZERO, Target::Exterior, &params(n_walks, derive_seed(seed, &[1])))?;
    let log_inv = (est.estimate > 0.0).then(|| -est.estimate.ln());
    Ok(ProbeRecord {
        z,
        n_bubbles: domain.len(),
        n_walks,
        hits_exterior: est.hits_exterior,
        omega_hat: est.estimate,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        log_inv,
        log_inv_low: -est.ci_high.ln(),
        log_inv_high: (est.ci_low > 0.0).then(|| -est.ci_low.ln()),
        seed,
    })
}

fn summarize(r: f64, mode: DensityMode, probes: Vec<ProbeRecord>) -> HarmonicLayer {
    let unbounded = probes.iter().filter(|p| p.log_inv.is_none()).count();
    let bounded: Vec<&ProbeRecord> = probes.iter().filter(|p| p.log_inv.is_some()).collect();
    let (value, value_low, value_high) = match mode {
        DensityMode::Lower => {
            let v = bounded.iter().filter_map(|p| p.log_inv).reduce(f64::min);
            let lo = bounded.iter().map(|p| p.log_inv_low).reduce(f64::min).unwrap_or(0.0);
            let hi = bounded
                .iter()
                .map(|p| p.log_inv_high.unwrap_or(f64::INFINITY))
                .reduce(f64::min)
                .filter(|h| h.is_finite());
            (v, lo, hi)
        }
        DensityMode::Upper if unbounded > 0 => (None, f64::INFINITY, None),
        DensityMode::Upper => {
            let v = bounded.iter().filter_map(|p| p.log_inv).reduce(f64::max);
            let lo = bounded.iter().map(|p| p.log_inv_low).fold(0.0, f64::max);
            let hi = bounded
                .iter()
                .map(|p| p.log_inv_high.unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            (v, lo, Some(hi).filter(|h| h.is_finite()))
        }
    };
    let warning = (unbounded > 0).then(|| match mode {
        DensityMode::Lower => format!("{unbounded} probe(s) with no exterior hit were left out of the infimum"),
        DensityMode::Upper => format!("{unbounded} probe(s) with no exterior hit make the supremum unbounded"),
    });
    HarmonicLayer {
        r,
        value,
        value_low: if value_low.is_finite() { value_low } else { 0.0 },
        value_high,
        unbounded_probes: unbounded,
        warning,
        probes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    Mixed,
}

pub fn trend(values: &[f64]) -> Trend {
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    if diffs.iter().all(|&d| d == 0.0) {
        Trend::Constant
    } else if diffs.iter().all(|&d| d >= 0.0) {
        Trend::Increasing
    } else if diffs.iter().all(|&d| d <= 0.0) {
        Trend::Decreasing
    } else {
        Trend::Mixed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub r_values: Vec<f64>,
    pub uniform_lower: Vec<f64>,
    pub uniform_upper: Vec<f64>,
    pub harmonic_lower: Vec<Option<f64>>,
    pub harmonic_upper: Vec<Option<f64>>,
    /// harmonic / uniform per r.
    pub ratio_lower: Vec<Option<f64>>,
    pub ratio_upper: Vec<Option<f64>>,
    pub trend_uniform_lower: Trend,
    pub trend_harmonic_lower: Trend,
    pub low_confidence: bool,
    pub notes: Vec<String>,
    pub uniform: DensityEstimate,
    pub lower_curve: HarmonicDensityCurve,
    pub upper_curve: HarmonicDensityCurve,
}

/// Uniform and harmonic densities side by side on the same probes.
pub fn theorem2_report(
    seq: &PointSequence,
    r_values: &[f64],
    probes: &ProbeSet,
    upper_max_modulus: f64,
    mc: &HarmonicMc,
) -> Result<Theorem2Report> {
    let upper_probes = ProbeSet::from_points(
        seq.points().iter().copied().filter(|p| p.abs() <= upper_max_modulus).collect(),
        "sequence points",
    );
    let uniform = uniform_density(seq, r_values, probes, DensityMode::Lower)?;
    let uniform_up = if upper_probes.points.is_empty() {
        uniform.clone()
    } else {
        uniform_density(seq, r_values, &upper_probes, DensityMode::Upper)?
    };
    let lower = harmonic_density_curve(seq, r_values, DensityMode::Lower, probes, upper_max_modulus, mc)?;
    let upper = if upper_probes.points.is_empty() {
        lower.clone()
    } else {
        harmonic_density_curve(seq, r_values, DensityMode::Upper, probes, upper_max_modulus, mc)?
    };
    let ratio = |h: &[Option<f64>], u: &[f64]| -> Vec<Option<f64>> {
        h.iter()
            .zip(u)
            .map(|(h, &u)| h.filter(|_| u > 0.0).map(|h| h / u))
            .collect()
    };
    let harmonic_lower = lower.values();
    let harmonic_upper = upper.values();
    let mut notes = Vec::new();
    let max_bubbles = lower
        .per_r
        .iter()
        .flat_map(|l| l.probes.iter().map(|p| p.n_bubbles))
        .max()
        .unwrap_or(0);
    if max_bubbles < 8 {
        notes.push(format!("at most {max_bubbles} bubbles per probe domain: density comparison is degenerate"));
    }
    if uniform.truncation_dominated.iter().any(|&t| t) {
        notes.push("some probe disks reach past the outermost sequence point".to_string());
    }
    for layer in lower.per_r.iter().chain(&upper.per_r) {
        if let Some(w) = &layer.warning {
            notes.push(format!("r = {}: {w}", layer.r));
        }
    }
    let finite_lower: Vec<f64> = harmonic_lower.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
    Ok(Theorem2Report {
        r_values: r_values.to_vec(),
        ratio_lower: ratio(&harmonic_lower, &uniform.lower_curve),
        ratio_upper: ratio(&harmonic_upper, &uniform_up.upper_curve),
        uniform_lower: uniform.lower_curve.clone(),
        uniform_upper: uniform_up.upper_curve.clone(),
        harmonic_lower,
        harmonic_upper,
        trend_uniform_lower: trend(&uniform.lower_curve),
        trend_harmonic_lower: trend(&finite_lower),
        low_confidence: !notes.is_empty(),
        notes,
        uniform,
        lower_curve: lower,
        upper_curve: upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{mobius_apply, rho_unchecked};
    use crate::walker::one_hole_exact;

    #[test]
    fn empty_annuli_give_zero() {
        let s = PointSequence::new(vec![Point::new(0.1, 0.0)], "one").unwrap();
        let probes = ProbeSet::from_points(vec![Point::ZERO, Point::new(0.0, 0.2)], "two");
        let c = harmonic_density_curve(&s, &[0.6, 0.8], DensityMode::Lower, &probes, 0.5, &HarmonicMc::new(200, 1)).unwrap();
        for layer in &c.per_r {
            assert_eq!(layer.value, Some(0.0));
            assert!(layer.probes.iter().all(|p| p.omega_hat == 1.0));
        }
    }

    #[test]
    fn single_bubble_matches_closed_form() {
        let lambda = Point::new(0.7, 0.1);
        let s = PointSequence::new(vec![lambda], "one").unwrap();
        let z = Point::new(0.0, -0.2);
        let r = 0.9;
        let rho = rho_unchecked(z, lambda);
        assert!(rho > 0.5 && rho < r);
        let probes = ProbeSet::from_points(vec![z], "z");
        let c = harmonic_density_curve(&s, &[r], DensityMode::Lower, &probes, 0.0, &HarmonicMc::new(20_000, 3)).unwrap();
        let layer = &c.per_r[0];
        let exact = -(1.0 - one_hole_exact(mobius_apply(z, lambda).unwrap(), 1.0 - r).unwrap()).ln();
        let p = &layer.probes[0];
        let v = layer.value.unwrap();
        // three-sigma band translated through the logarithm
        let sigma = (p.omega_hat * (1.0 - p.omega_hat) / p.n_walks as f64).sqrt();
        let band = 3.0 * sigma / p.omega_hat;
        assert!((v - exact).abs() <= band, "{v} vs {exact}");
        assert!(p.log_inv_low <= v && v <= p.log_inv_high.unwrap());
    }

    #[test]
    fn deterministic_curves() {
        let s = crate::sequences::generate_ring_lattice(&crate::sequences::RingLattice::new(0.5, 1.0, 6)).unwrap();
        let probes = ProbeSet::from_points(vec![Point::ZERO], "origin");
        let mc = HarmonicMc::new(500, 9);
        let a = harmonic_density_curve(&s, &[0.75], DensityMode::Lower, &probes, 0.0, &mc).unwrap();
        let b = harmonic_density_curve(&s, &[0.75], DensityMode::Lower, &probes, 0.0, &mc).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unbounded_probes_are_flagged() {
        let records = vec![ProbeRecord {
            z: Point::ZERO,
            n_bubbles: 3,
            n_walks: 10,
            hits_exterior: 0,
            omega_hat: 0.0,
            ci_low: 0.0,
            ci_high: 0.3,
            log_inv: None,
            log_inv_low: -(0.3f64).ln(),
            log_inv_high: None,
            seed: 0,
        }];
        let up = summarize(0.9, DensityMode::Upper, records.clone());
        assert_eq!(up.value, None);
        assert!(up.warning.is_some());
        let lo = summarize(0.9, DensityMode::Lower, records);
        assert_eq!(lo.value, None);
        assert_eq!(lo.unbounded_probes, 1);
    }

    #[test]
    fn trend_labels() {
        assert_eq!(trend(&[1.0, 2.0, 3.0]), Trend::Increasing);
        assert_eq!(trend(&[3.0, 2.0]), Trend::Decreasing);
        assert_eq!(trend(&[1.0, 3.0, 2.0]), Trend::Mixed);
        assert_eq!(trend(&[1.0, 1.0]), Trend::Constant);
    }

    #[test]
    fn finite_sequence_report_is_flagged() {
        let s = PointSequence::new((0..5).map(|k| Point::polar(0.6, k as f64)).collect(), "ring").unwrap();
        let probes = ProbeSet::from_points(vec![Point::ZERO], "origin");
        let rep = theorem2_report(&s, &[0.7, 0.9], &probes, 0.7, &HarmonicMc::new(300, 5)).unwrap();
        assert!(rep.low_confidence);
        assert_eq!(rep.ratio_lower.len(), 2);
    }
}
