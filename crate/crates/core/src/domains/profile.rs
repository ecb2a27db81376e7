use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A nonincreasing radius profile `phi : (0,1) -> (0,1)` assigning the
/// pseudohyperbolic bubble radius `phi(|lambda|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusProfile {
    Constant { c: f64 },
    /// `c (1 - t)^gamma`
    PowerLaw { c: f64, gamma: f64 },
    /// `exp(-c / (1 - t)^beta)`
    ExpInverse { c: f64, beta: f64 },
    /// Piecewise linear through `(t, phi)` knots; constant before the first
    /// knot and undefined past the last one.
    Table { knots: Vec<(f64, f64)> },
}

impl RadiusProfile {
    pub fn constant(c: f64) -> Result<Self> {
        let p = RadiusProfile::Constant { c };
        p.validate()?;
        Ok(p)
    }

    pub fn power_law(c: f64, gamma: f64) -> Result<Self> {
        let p = RadiusProfile::PowerLaw { c, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn exp_inverse(c: f64, beta: f64) -> Result<Self> {
        let p = RadiusProfile::ExpInverse { c, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn table(knots: Vec<(f64, f64)>) -> Result<Self> {
        let p = RadiusProfile::Table { knots };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            RadiusProfile::Constant { c } => unit("c", *c),
            RadiusProfile::PowerLaw { c, gamma } => {
                unit("c", *c)?;
                positive("gamma", *gamma)
            }
            RadiusProfile::ExpInverse { c, beta } => {
                positive("c", *c)?;
                positive("beta", *beta)
            }
            RadiusProfile::Table { knots } => {
                if knots.is_empty() {
                    return Err(invalid("table profile needs at least one knot"));
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(invalid("table knots must have increasing t"));
                    }
                    if w[1].1 > w[0].1 {
                        return Err(invalid("table profile must be nonincreasing"));
                    }
                }
                for &(t, phi) in knots {
                    if !(0.0..1.0).contains(&t) {
                        return Err(invalid(format!("table t must lie in [0,1), got {t}")));
                    }
                    unit("table phi", phi)?;
                }
                Ok(())
            }
        }
    }

    /// `phi(t)`, or `None` past the data of a table profile.
    pub fn eval(&self, t: f64) -> Option<f64> {
        match self {
            RadiusProfile::Constant { c } => Some(*c),
            RadiusProfile::PowerLaw { c, gamma } => Some(c * (1.0 - t).powf(*gamma)),
            RadiusProfile::ExpInverse { c, beta } => Some((-c / (1.0 - t).powf(*beta)).exp()),
            RadiusProfile::Table { knots } => table_eval(knots, t),
        }
    }

    /// `log(1/phi(t))` at `t = 1 - exp(-u)`, written in terms of `u` so that
    /// horizons far beyond double resolution of `t` stay exact.
    pub fn neg_log_at_gap(&self, u: f64) -> Option<f64> {
        match self {
            RadiusProfile::Constant { c } => Some(-c.ln()),
            RadiusProfile::PowerLaw { c, gamma } => Some(-c.ln() + gamma * u),
            RadiusProfile::ExpInverse { c, beta } => Some(c * (beta * u).exp()),
            RadiusProfile::Table { knots } => {
                let t = -(-u).exp_m1();
                if t > knots.last()?.0 {
                    return None;
                }
                table_eval(knots, t).map(|phi| -phi.ln())
            }
        }
    }

    /// Largest `u = log(1/(1-t))` at which the profile is defined.
    pub fn gap_horizon(&self) -> f64 {
        match self {
            RadiusProfile::Table { knots } => knots
                .last()
                .map(|k| -(-k.0).ln_1p())
                .unwrap_or(0.0),
            _ => f64::INFINITY,
        }
    }

    /// Parses `const:c`, `power:c,gamma`, `expinv:c,beta` or `table:<path>`.
    /// Table files hold `t,phi` rows with an optional header.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("profile spec `{spec}` lacks a `kind:` prefix")))?;
        let nums = || -> Result<Vec<f64>> {
            args.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number `{s}` in profile spec `{spec}`")))
                })
                .collect()
        };
        let arity = |v: Vec<f64>, n: usize| -> Result<Vec<f64>> {
            if v.len() == n {
                Ok(v)
            } else {
                Err(Error::Parse(format!("profile `{kind}` takes {n} parameter(s), got {}", v.len())))
            }
        };
        match kind {
            "const" => {
                let v = arity(nums()?, 1)?;
                RadiusProfile::constant(v[0])
            }
            "power" => {
                let v = arity(nums()?, 2)?;
                RadiusProfile::power_law(v[0], v[1])
            }
            "expinv" => {
                let v = arity(nums()?, 2)?;
                RadiusProfile::exp_inverse(v[0], v[1])
            }
            "table" => RadiusProfile::table(read_table(Path::new(args))?),
            other => Err(Error::Parse(format!("unknown profile kind `{other}`"))),
        }
    }
}

fn table_eval(knots: &[(f64, f64)], t: f64) -> Option<f64> {
    let first = knots.first()?;
    if t <= first.0 {
        return Some(first.1);
    }
    for w in knots.windows(2) {
        let ((t0, p0), (t1, p1)) = (w[0], w[1]);
        if t <= t1 {
            return Some(p0 + (p1 - p0) * (t - t0) / (t1 - t0));
        }
    }
    None
}

pub(crate) fn read_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut knots = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed = (rec.get(0).map(str::parse::<f64>), rec.get(1).map(str::parse::<f64>));
        match parsed {
            (Some(Ok(t)), Some(Ok(phi))) => knots.push((t, phi)),
            _ if i == 0 => continue,
            _ => return Err(Error::Parse(format!("bad table row {} in {}", i + 1, path.display()))),
        }
    }
    Ok(knots)
}
