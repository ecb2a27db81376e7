//! The decay criterion `int_0^1 dt / ((1-t) log(1/phi(t))) < inf` and its
//! sum form `sum_j 1 / log(1/phi(1 - K^-j)) < inf`.
//!
//! Under `u = log(1/(1-t))` the integral becomes `int_0^inf du / L(u)` with
//! `L(u) = log(1/phi(1 - e^-u))`. Both evaluators record partial values at
//! checkpoints a decade apart and classify from the last three decades:
//! increments that fail to shrink by half are a divergent trend, increments
//! that collapse are convergent, anything else is inconclusive.

use serde::{Deserialize, Serialize};

use super::profile::RadiusProfile;
use crate::error::{invalid, Result};
use crate::quadrature::integrate;

/// Largest `u` the integral evaluator reaches (`10^4`, three decades past `u = 10`).
pub const INTEGRAL_HORIZON: f64 = 1e4;
pub const DEFAULT_K: f64 = 2.0;
pub const DEFAULT_J_MAX: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionMethod {
    Integral,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub method: CriterionMethod,
    /// Partial value at the horizon, plus a geometric tail estimate when
    /// convergent.
    pub value: f64,
    pub divergent: bool,
    pub classification: Classification,
    pub k: Option<f64>,
    /// Sum form: `S_j` for `j = 1..=J`. Integral form: the checkpoint values.
    pub partial_sums: Vec<f64>,
    pub checkpoints: Vec<f64>,
    pub checkpoint_values: Vec<f64>,
    /// Terms skipped because `phi(1 - K^-j) >= 1`.
    pub skipped_terms: Vec<usize>,
    pub horizon: f64,
}

/// Decade-increment classifier shared by both evaluators.
pub(crate) fn classify(values: &[f64]) -> (Classification, f64) {
    if values.len() < 4 {
        return (Classification::Inconclusive, 0.0);
    }
    let v = &values[values.len() - 4..];
    let d1 = v[1] - v[0];
    let d2 = v[2] - v[1];
    let d3 = v[3] - v[2];
    let total = v[3].abs().max(f64::MIN_POSITIVE);
    if d3 <= 1e-12 * total || (d2 > 0.0 && d3 <= 0.2 * d2 && d3 <= 1e-3 * total) {
        let ratio = if d2 > 0.0 { (d3 / d2).min(0.5) } else { 0.0 };
        return (Classification::Convergent, d3 * ratio / (1.0 - ratio));
    }
    if d3 > 0.0 && d3 >= 0.5 * d2 && d2 >= 0.5 * d1 {
        return (Classification::Divergent, 0.0);
    }
    (Classification::Inconclusive, 0.0)
}

pub fn criterion_integral(profile: &RadiusProfile, tail_tolerance: f64) -> Result<CriterionReport> {
    profile.validate()?;
    if !(tail_tolerance > 0.0) {
        return Err(invalid("tail tolerance must be positive"));
    }
    let horizon = profile.gap_horizon().min(INTEGRAL_HORIZON);
    let g = |u: f64| match profile.neg_log_at_gap(u) {
        Some(l) if l > 0.0 => 1.0 / l,
        Some(_) => f64::INFINITY,
        None => 0.0,
    };
    let mut checkpoints = vec![0.0];
    let mut edge = 1.0;
    while edge < horizon {
        checkpoints.push(edge);
        edge *= 10.0;
    }
    checkpoints.push(horizon);
    let mut values = vec![0.0];
    let mut acc = 0.0;
    for w in checkpoints.windows(2) {
        acc += integrate(g, w[0], w[1], 0.1 * tail_tolerance, 1e-13).value;
        values.push(acc);
    }
    let conclusive_horizon = horizon >= INTEGRAL_HORIZON;
    let (mut classification, tail) = classify(&values[1..]);
    if !conclusive_horizon {
        classification = Classification::Inconclusive;
    }
    let value = match classification {
        Classification::Convergent => acc + tail,
        _ => acc,
    };
    Ok(CriterionReport {
        method: CriterionMethod::Integral,
        value,
        divergent: classification == Classification::Divergent,
        classification,
        k: None,
        partial_sums: values.clone(),
        checkpoints,
        checkpoint_values: values,
        skipped_terms: vec![],
        horizon,
    })
}

pub fn criterion_sum(profile: &RadiusProfile, k: f64, j_max: usize) -> Result<CriterionReport> {
    profile.validate()?;
    if !(k > 1.0) || !k.is_finite() {
        return Err(invalid(format!("K must exceed 1, got {k}")));
    }
    let ln_k = k.ln();
    let mut partial = Vec::with_capacity(j_max);
    let mut skipped = Vec::new();
    let mut acc = 0.0;
    let mut defined_to = 0usize;
    for j in 1..=j_max {
        match profile.neg_log_at_gap(j as f64 * ln_k) {
            Some(l) if l > 0.0 => acc += 1.0 / l,
            Some(_) => skipped.push(j),
            None => break,
        }
        defined_to = j;
        partial.push(acc);
    }
    let mut checkpoints = Vec::new();
    let mut c = 1usize;
    while c <= defined_to {
        checkpoints.push(c as f64);
        c *= 10;
    }
    if defined_to > 0 && checkpoints.last() != Some(&(defined_to as f64)) {
        checkpoints.push(defined_to as f64);
    }
    let checkpoint_values: Vec<f64> = checkpoints.iter().map(|&j| partial[j as usize - 1]).collect();
    let (mut classification, tail) = classify(&checkpoint_values);
    if defined_to < j_max || j_max < 1000 {
        classification = Classification::Inconclusive;
    }
    let value = match classification {
        Classification::Convergent => acc + tail,
        _ => acc,
    };
    Ok(CriterionReport {
        method: CriterionMethod::Sum,
        value,
        divergent: classification == Classification::Divergent,
        classification,
        k: Some(k),
        partial_sums: partial,
        checkpoints,
        checkpoint_values,
        skipped_terms: skipped,
        horizon: defined_to as f64,
    })
}

/// `int_{u0}^inf du / L(u)`, or `None` when the tail is not convergent at the
/// integral horizon.
pub(crate) fn integral_tail_from(profile: &RadiusProfile, u0: f64) -> Option<f64> {
    let report = criterion_integral(profile, 1e-12).ok()?;
    if report.classification != Classification::Convergent {
        return None;
    }
    let g = |u: f64| 1.0 / profile.neg_log_at_gap(u).unwrap_or(f64::INFINITY);
    if u0 >= INTEGRAL_HORIZON {
        return Some(0.0);
    }
    let mut acc = 0.0;
    let mut a = u0;
    while a < INTEGRAL_HORIZON {
        let b = (a.max(1.0) * 10.0).min(INTEGRAL_HORIZON);
        acc += integrate(g, a, b, 1e-15, 1e-12).value;
        a = b;
    }
    Some(acc)
}
