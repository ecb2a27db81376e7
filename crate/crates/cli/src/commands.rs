//! Subcommand arguments and handlers.

use std::path::{Path, PathBuf};
use std::time::Instant;

use champagne::barriers::DEFAULT_BOUNDARY_SAMPLES;
use champagne::domains::criterion::{DEFAULT_J_MAX, DEFAULT_K};
use champagne::domains::{profile_spec_string, DomainFile};
use champagne::harmonic_density::{trend, MAX_WALKS_PER_PROBE, PILOT_WALKS};
use champagne::io::{read_domain, read_sequence, sequence_to_string};
use champagne::sequences::{blaschke_partial_sums, covering_radius_at};
use champagne::walker::{with_threads, DEFAULT_STEP_BUDGET};
use champagne::{
    barrier_lower_bound, blaschke_sum, build_champagne, build_finitely_connected, criterion_integral, criterion_sum,
    estimate_measure, extremal_c, extremal_d, generate_ring_lattice, layered_crossing, sandwich_bounds, separation,
    theorem2_report, uniform_density, ChampagneDomain, DeltaRule, DensityMode, HarmonicMc, McParams, Point,
    PointSequence, ProbeSet, RadiusProfile, RingLattice, Target,
};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::resolve_seed;
use crate::error::{usage, CliResult};
use crate::output::{cell, cell_opt, emit, envelope, write_atomic, Table};

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a ring-lattice sequence
    GenSeq(GenSeqArgs),
    /// Separation, covering radius, Blaschke sums and c(r), d(r)
    Diag(DiagArgs),
    /// Uniform density curves over a probe grid
    Density(DensityArgs),
    /// Decay criterion of a radius profile
    Criterion(CriterionArgs),
    /// Build a champagne domain or Omega(z, r) and write it as JSON
    BuildDomain(BuildDomainArgs),
    /// Walk-on-spheres estimate of a harmonic measure
    Measure(MeasureArgs),
    /// Union-bound and single-hole bounds on the exterior measure
    Sandwich(SandwichArgs),
    /// Layered crossing fractions between the circles |z| = 1 - K^-j
    Layered(LayeredArgs),
    /// Barrier lower bound on the exterior measure
    Barrier(BarrierArgs),
    /// Uniform against harmonic density on shared probes
    Theorem2(Theorem2Args),
    /// Exterior measure over a list of truncations
    DichotomySweep(SweepArgs),
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected `re,im`, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number `{v}` in `{s}`"));
    Ok(Point::new(num(re)?, num(im)?))
}

fn parse_target(s: &str) -> Result<Target, String> {
    s.parse().map_err(|e: champagne::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<DensityMode, String> {
    s.parse().map_err(|e: champagne::Error| e.to_string())
}

/// `q=..,scale=..,depth=..[,phase_seed=..]`; scale defaults to 1.
pub fn parse_ring(spec: &str) -> CliResult<RingLattice> {
    let (mut q, mut scale, mut depth, mut phase) = (None, 1.0, None, None);
    for part in spec.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("ring spec entry `{part}` is not key=value")))?;
        let bad = || usage(format!("bad value `{v}` for `{k}` in ring spec"));
        match k.trim() {
            "q" => q = Some(v.trim().parse::<f64>().map_err(|_| bad())?),
            "scale" => scale = v.trim().parse::<f64>().map_err(|_| bad())?,
            "depth" => depth = Some(v.trim().parse::<u32>().map_err(|_| bad())?),
            "phase_seed" => phase = Some(v.trim().parse::<u64>().map_err(|_| bad())?),
            other => return Err(usage(format!("unknown ring spec key `{other}`"))),
        }
    }
    let (Some(q), Some(depth)) = (q, depth) else {
        return Err(usage("ring spec needs q and depth"));
    };
    let lattice = RingLattice::new(q, scale, depth);
    Ok(match phase {
        Some(s) => lattice.with_phase_seed(s),
        None => lattice,
    })
}

#[derive(Args, Debug, Serialize)]
pub struct SeqArgs {
    /// Sequence file: CSV `re,im` rows, or JSON `[[re, im], ...]` for `.json`
    #[arg(long, value_name = "PATH", conflicts_with = "ring", required_unless_present = "ring")]
    seq: Option<PathBuf>,
    /// Ring lattice `q=..,scale=..,depth=..[,phase_seed=..]`
    #[arg(long, value_name = "SPEC")]
    ring: Option<String>,
}

impl SeqArgs {
    fn load(&self) -> CliResult<PointSequence> {
        match (&self.seq, &self.ring) {
            (Some(path), None) => Ok(read_sequence(path)?),
            (None, Some(spec)) => Ok(generate_ring_lattice(&parse_ring(spec)?)?),
            _ => Err(usage("exactly one of --seq and --ring is required")),
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct McArgs {
    /// Walk-on-spheres shell width; defaults to 1e-3 of the smallest resolved bubble radius
    #[arg(long)]
    epsilon: Option<f64>,
    /// Base seed; generated and recorded when absent
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Per-walk step limit
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    step_budget: u64,
}

impl McArgs {
    fn resolve(&mut self, subcommand: &str) -> CliResult<u64> {
        let seed = resolve_seed(self.seed, subcommand)?;
        self.seed = Some(seed);
        Ok(seed)
    }

    fn params(&self, walks: u64, seed: u64) -> McParams {
        let mut p = McParams::new(walks, seed).with_threads(self.threads);
        p.epsilon = self.epsilon;
        p.step_budget = self.step_budget;
        p
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ProbeArgs {
    /// Probe grid covers |z| <= this modulus
    #[arg(long, default_value_t = 0.9)]
    probe_modulus: f64,
    /// Probe grid density
    #[arg(long, default_value_t = 4)]
    grid_density: u32,
    /// Also probe the sequence points inside the probe region
    #[arg(long)]
    include_sequence: bool,
}

impl ProbeArgs {
    fn build(&self, seq: &PointSequence) -> CliResult<ProbeSet> {
        let grid = ProbeSet::pseudo_grid(self.probe_modulus, self.grid_density)?;
        Ok(if self.include_sequence {
            grid.with_sequence(seq, self.probe_modulus)
        } else {
            grid
        })
    }
}

fn finish<A: Serialize>(name: &str, args: &A, config_file: Option<&Path>, result: Value, out: Option<&Path>) -> CliResult<()> {
    let mut config = serde_json::to_value(args)?;
    if let Value::Object(m) = &mut config {
        m.insert("config_file".into(), json!(config_file));
    }
    emit(out, &envelope(name, config, result))
}

pub fn run(cmd: Command, config_file: Option<&Path>) -> CliResult<()> {
    match cmd {
        Command::GenSeq(a) => gen_seq(a, config_file),
        Command::Diag(a) => diag(a, config_file),
        Command::Density(a) => density(a, config_file),
        Command::Criterion(a) => criterion(a, config_file),
        Command::BuildDomain(a) => build_domain(a, config_file),
        Command::Measure(a) => measure(a, config_file),
        Command::Sandwich(a) => sandwich(a, config_file),
        Command::Layered(a) => layered(a, config_file),
        Command::Barrier(a) => barrier(a, config_file),
        Command::Theorem2(a) => theorem2(a, config_file),
        Command::DichotomySweep(a) => sweep(a, config_file),
    }
}

#[derive(Args, Debug, Serialize)]
pub struct GenSeqArgs {
    /// Ring lattice `q=..,scale=..,depth=..[,phase_seed=..]`
    #[arg(long, value_name = "SPEC")]
    ring: String,
    /// Sequence file to write, JSON for a `.json` extension and CSV otherwise
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn gen_seq(a: GenSeqArgs, cfg: Option<&Path>) -> CliResult<()> {
    let lattice = parse_ring(&a.ring)?;
    let seq = generate_ring_lattice(&lattice)?;
    let rings: Vec<Value> = (1..=lattice.depth)
        .map(|j| json!({"j": j, "radius": lattice.ring_radius(j), "count": lattice.ring_count(j)}))
        .collect();
    let mut result = json!({
        "lattice": lattice,
        "n_points": seq.len(),
        "rings": rings,
        "separation_lower_bound": lattice.separation_lower_bound(),
        "sequence_file": a.out,
    });
    match &a.out {
        Some(path) => {
            let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
            write_atomic(path, &sequence_to_string(&seq, json)?)?;
        }
        None => {
            let pairs: Vec<[f64; 2]> = seq.points().iter().map(|p| [p.re, p.im]).collect();
            result["points"] = json!(pairs);
        }
    }
    finish("gen-seq", &a, cfg, result, None)
}

#[derive(Args, Debug, Serialize)]
pub struct DiagArgs {
    #[command(flatten)]
    #[serde(flatten)]
    seq: SeqArgs,
    #[command(flatten)]
    #[serde(flatten)]
    probes: ProbeArgs,
    /// Blaschke sums above this count as divergent
    #[arg(long, default_value_t = 10.0)]
    divergence_threshold: f64,
    /// Shell ratio q of the partial Blaschke sums over 1 - q^(j-1) <= |z| < 1 - q^j
    #[arg(long, default_value_t = 0.5)]
    shell_q: f64,
    /// Number of shells in the partial sums
    #[arg(long, default_value_t = 12)]
    shells: usize,
    /// Radii r in (1/2, 1) at which to evaluate c(r) and d(r)
    #[arg(long, value_delimiter = ',')]
    extremal_r: Vec<f64>,
    /// Output file (stdout without one)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn diag(a: DiagArgs, cfg: Option<&Path>) -> CliResult<()> {
    let seq = a.seq.load()?;
    if !(a.shell_q > 0.0 && a.shell_q < 1.0) {
        return Err(usage(format!("--shell-q must lie in (0,1), got {}", a.shell_q)));
    }
    let probes = a.probes.build(&seq)?;
    let mut extremal = Vec::new();
    for &r in &a.extremal_r {
        let c = extremal_c(&seq, r, &probes)?;
        let d = extremal_d(&seq, r)?;
        extremal.push(json!({"r": r, "c": c, "d": d, "log_scale": (1.0 / (1.0 - r)).ln()}));
    }
    let result = json!({
        "n_points": seq.len(),
        "max_modulus": seq.max_modulus(),
        "separation": separation(&seq),
        "covering_radius": covering_radius_at(&seq, &probes)?,
        "n_probes": probes.points.len(),
        "probe_spec": probes.description,
        "blaschke_sum": blaschke_sum(&seq, a.divergence_threshold),
        "blaschke_partial_sums": blaschke_partial_sums(&seq, a.shell_q, a.shells),
        "extremal": extremal,
    });
    finish("diag", &a, cfg, result, a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct DensityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    seq: SeqArgs,
    #[command(flatten)]
    #[serde(flatten)]
    probes: ProbeArgs,
    /// Radii r in (0, 1)
    #[arg(long, value_delimiter = ',', required = true)]
    r_list: Vec<f64>,
    /// Which density the final value reports: lower or upper
    #[arg(long, value_parser = parse_mode, default_value = "lower")]
    mode: DensityMode,
    /// Output file (stdout without one)
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV flattening of the curves
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn density(a: DensityArgs, cfg: Option<&Path>) -> CliResult<()> {
    let seq = a.seq.load()?;
    let probes = a.probes.build(&seq)?;
    let est = uniform_density(&seq, &a.r_list, &probes, a.mode)?;
    let mut t = Table::new(vec!["r", "lower", "upper", "truncated_probes", "truncation_dominated"]);
    for (i, &r) in est.r_values.iter().enumerate() {
        t.row(vec![
            cell(r),
            cell(est.lower_curve[i]),
            cell(est.upper_curve[i]),
            est.truncated_probes[i].to_string(),
            est.truncation_dominated[i].to_string(),
        ]);
    }
    t.write(a.csv.as_deref())?;
    finish("density", &a, cfg, serde_json::to_value(&est)?, a.out.as_deref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Both,
    Integral,
    Sum,
}

#[derive(Args, Debug, Serialize)]
pub struct CriterionArgs {
    /// Radius profile `const:c`, `power:c,gamma`, `expinv:c,beta` or `table:<path>`
    #[arg(long)]
    profile: String,
    /// Evaluator
    #[arg(long, value_enum, default_value_t = Method::Both)]
    method: Method,
    /// Ratio K of the sum over t_j = 1 - K^-j
    #[arg(long, default_value_t = DEFAULT_K)]
    k: f64,
    /// Number of terms of the sum
    #[arg(long, default_value_t = DEFAULT_J_MAX)]
    j_max: usize,
    /// Absolute tolerance of the integral
    #[arg(long, default_value_t = 1e-10)]
    tail_tol: f64,
    /// Output file (stdout without one)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn criterion(a: CriterionArgs, cfg: Option<&Path>) -> CliResult<()> {
    let profile = RadiusProfile::parse(&a.profile)?;
    let integral = match a.method {
        Method::Sum => None,
        _ => Some(criterion_integral(&profile, a.tail_tol)?),
    };
    let sum = match a.method {
        Method::Integral => None,
        _ => Some(criterion_sum(&profile, a.k, a.j_max)?),
    };
    let primary = integral.as_ref().or(sum.as_ref()).expect("one evaluator runs");
    let result = json!({
        "profile": profile_spec_string(&profile),
        "integral_value": integral.as_ref().map(|r| r.value),
        "sum_value": sum.as_ref().map(|r| r.value),
        "classification": primary.classification,
        "integral": integral,
        "sum": sum,
    });
    finish("criterion", &a, cfg, result, a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct BuildDomainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    seq: SeqArgs,
    /// Radius profile `const:c`, `power:c,gamma`, `expinv:c,beta` or `table:<path>`
    #[arg(long, required_unless_present = "r", conflicts_with = "r")]
    profile: Option<String>,
    /// Truncation modulus R: bubbles are placed at the points with |lambda| <= R
    #[arg(long, default_value_t = 1.0)]
    truncation: f64,
    /// Point that must stay outside every bubble, repeatable
    #[arg(long = "start", value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0")]
    starts: Vec<Point>,
    /// Build Omega(z, r) around --center instead, for r in (1/2, 1)
    #[arg(long)]
    r: Option<f64>,
    /// Center z of Omega(z, r)
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0")]
    center: Point,
    /// Bubble radius rule of Omega(z, r): `one-minus-r` or `table:<path>` with r,delta rows
    #[arg(long, default_value = "one-minus-r")]
    delta: String,
    /// Domain file to write; the summary goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn domain_summary(d: &ChampagneDomain) -> Value {
    json!({
        "n_bubbles": d.len(),
        "truncation_R": d.truncation_r(),
        "profile_spec": d.profile_spec(),
        "tail_sum": d.tail_sum(),
        "circumference_sum": d.circumference_sum(),
        "min_resolved_radius": d.min_resolved_radius(),
        "n_tiny": (0..d.len()).filter(|&k| d.is_tiny(k)).count(),
        "default_epsilon": d.default_epsilon(),
    })
}

fn build_domain(a: BuildDomainArgs, cfg: Option<&Path>) -> CliResult<()> {
    let seq = a.seq.load()?;
    let domain = match (a.r, &a.profile) {
        (Some(r), _) => {
            let mut d = build_finitely_connected(&seq, a.center, r, &DeltaRule::parse(&a.delta)?)?;
            d.set_profile_spec(Some(format!("omega:z={},{};r={r};delta={}", a.center.re, a.center.im, a.delta)));
            d
        }
        (None, Some(spec)) => build_champagne(&seq, &RadiusProfile::parse(spec)?, a.truncation, &a.starts)?,
        (None, None) => return Err(usage("either --profile or --r is required")),
    };
    let file = serde_json::to_value(DomainFile::from(&domain))?;
    let mut result = domain_summary(&domain);
    result["domain_file"] = json!(a.out);
    match &a.out {
        Some(path) => {
            let mut text = serde_json::to_string_pretty(&file)?;
            text.push('\n');
            write_atomic(path, &text)?;
        }
        None => result["domain"] = file,
    }
    finish("build-domain", &a, cfg, result, None)
}

#[derive(Args, Debug, Serialize)]
pub struct MeasureArgs {
    /// Domain file written by build-domain
    #[arg(long)]
    domain: PathBuf,
    /// Starting point of the walks
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0")]
    start: Point,
    /// exterior, all or bubble:<k>
    #[arg(long, value_parser = parse_target, default_value = "exterior")]
    target: Target,
    /// Number of walks
    #[arg(long, default_value_t = 100_000)]
    walks: u64,
    #[command(flatten)]
    #[serde(flatten)]
    mc: McArgs,
    /// Output file (stdout without one)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn histogram_bins(hist: &[u64]) -> Vec<Value> {
    hist.iter()
        .enumerate()
        .map(|(b, &count)| {
            let (lo, hi) = if b == 0 { (0u64, 1u64) } else { (1 << (b - 1), 1 << b) };
            json!({"lo": lo, "hi": hi, "count": count})
        })
        .collect()
}

fn measure(mut a: MeasureArgs, cfg: Option<&Path>) -> CliResult<()> {
    let domain = read_domain(&a.domain)?;
    let seed = a.mc.resolve("measure")?;
    let t0 = Instant::now();
    let est = estimate_measure(&domain, a.start, a.target, &a.mc.params(a.walks, seed))?;
    let wall = t0.elapsed().as_secs_f64();
    let mut result = serde_json::to_value(&est)?;
    result["start"] = json!(a.start);
    result["three_sigma"] = json!(est.three_sigma());
    result["steps_histogram_bins"] = json!(histogram_bins(&est.steps_histogram));
    result["wall_time_s"] = json!(wall);
    result["steps_per_second"] = json!(est.total_steps as f64 / wall.max(1e-9));
    result["n_bubbles"] = json!(domain.len());
    finish("measure", &a, cfg, result, a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct SandwichArgs {
    /// Domain file written by build-domain
    #[arg(long)]
    domain: PathBuf,
    /// Point at which the bounds hold
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0")]
    start: Point,
    /// Output file (stdout without one)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sandwich(a: SandwichArgs, cfg: Option<&Path>) -> CliResult<()> {
    let domain = read_domain(&a.domain)?;
    let mut result = serde_json::to_value(sandwich_bounds(&domain, a.start)?)?;
    result["start"] = json!(a.start);
    finish("sandwich", &a, cfg, result, a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct LayeredArgs {
    /// Domain file written by build-domain
    #[arg(long)]
    domain: PathBuf,
    /// Circle ratio K > 1
    #[arg(long, default_value_t = 2.0)]
    k: f64,
    /// Number of layers
    #[arg(long, default_value_t = 3)]
    j_max: usize,
    /// Starts per circle, at least 8
    #[arg(long, default_value_t = 8)]
    grid: usize,
    /// Walks per start
    #[arg(long, default_value_t = 10_000)]
    walks: u64,
    #[command(flatten)]
    #[serde(flatten)]
    mc: McArgs,
    /// Output file (stdout without one)
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV flattening of the layers
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn layered(mut a: LayeredArgs, cfg: Option<&Path>) -> CliResult<()> {
    let domain = read_domain(&a.domain)?;
    let seed = a.mc.resolve("layered")?;
    let lc = layered_crossing(&domain, a.k, a.j_max, a.grid, &a.mc.params(a.walks, seed))?;
    let mut t = Table::new(vec!["j", "inner_radius", "outer_radius", "n_bubbles", "q_hat", "ci_low", "ci_high", "blocked_starts"]);
    for l in &lc.layers {
        t.row(vec![
            l.j.to_string(),
            cell(l.inner_radius),
            cell(l.outer_radius),
            l.n_bubbles.to_string(),
            cell(l.q_hat),
            cell(l.ci_low),
            cell(l.ci_high),
            l.blocked_starts.to_string(),
        ]);
    }
    t.write(a.csv.as_deref())?;
    finish("layered", &a, cfg, serde_json::to_value(&lc)?, a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct BarrierArgs {
    /// Domain file written by build-domain
    #[arg(long)]
    domain: PathBuf,
    /// Shell ratio eta in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    /// Number of layers; defaults to the outermost occupied shell
    #[arg(long)]
    layers: Option<usize>,
    /// Lower level b in [0, a); derived from the boundary samples when absent
    #[arg(long)]
    b: Option<f64>,
    /// Point at which the bound holds
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0")]
    start: Point,
    /// Boundary samples per bubble
    #[arg(long, default_value_t = DEFAULT_BOUNDARY_SAMPLES)]
    samples: usize,
    /// Output file (stdout without one)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn barrier(a: BarrierArgs, cfg: Option<&Path>) -> CliResult<()> {
    let domain = read_domain(&a.domain)?;
    let cert = barrier_lower_bound(&domain, a.eta, a.layers, a.b, a.start, a.samples)?;
    finish("barrier", &a, cfg, serde_json::to_value(&cert)?, a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct Theorem2Args {
    #[command(flatten)]
    #[serde(flatten)]
    seq: SeqArgs,
    /// Radii r in (1/2, 1)
    #[arg(long, value_delimiter = ',', required = true)]
    r_list: Vec<f64>,
    /// Walk budget per probe at omega = 1; the budget is divided by the pilot estimate
    #[arg(long, default_value_t = 1_000)]
    walks: u64,
    /// Pilot walks per probe
    #[arg(long, default_value_t = PILOT_WALKS)]
    pilot_walks: u64,
    /// Cap on the walks per probe
    #[arg(long, default_value_t = MAX_WALKS_PER_PROBE)]
    max_walks: u64,
    /// Walk-on-spheres shell width; defaults per domain
    #[arg(long)]
    epsilon: Option<f64>,
    /// Base seed; generated and recorded when absent
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Probe grid covers |z| <= this modulus
    #[arg(long, default_value_t = 0.85)]
    probe_modulus: f64,
    /// Probe grid density
    #[arg(long, default_value_t = 1)]
    grid_density: u32,
    /// Also probe the sequence points inside the probe region
    #[arg(long)]
    include_sequence: bool,
    /// Upper density probes the sequence points of modulus at most this
    #[arg(long, default_value_t = 0.5)]
    upper_modulus: f64,
    /// Output file (stdout without one)
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV flattening of the curves
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn theorem2(mut a: Theorem2Args, cfg: Option<&Path>) -> CliResult<()> {
    let seq = a.seq.load()?;
    let seed = resolve_seed(a.seed, "theorem2")?;
    a.seed = Some(seed);
    let grid = ProbeSet::pseudo_grid(a.probe_modulus, a.grid_density)?;
    let probes = if a.include_sequence {
        grid.with_sequence(&seq, a.probe_modulus)
    } else {
        grid
    };
    let mc = HarmonicMc {
        n_walks: a.walks,
        epsilon: a.epsilon,
        seed,
        threads: a.threads,
        pilot_walks: a.pilot_walks,
        max_walks: a.max_walks,
    };
    let report = with_threads(a.threads, || theorem2_report(&seq, &a.r_list, &probes, a.upper_modulus, &mc))??;
    let mut t = Table::new(vec![
        "r",
        "uniform_lower",
        "uniform_upper",
        "harmonic_lower",
        "harmonic_upper",
        "ratio_lower",
        "ratio_upper",
    ]);
    for (i, &r) in report.r_values.iter().enumerate() {
        t.row(vec![
            cell(r),
            cell(report.uniform_lower[i]),
            cell(report.uniform_upper[i]),
            cell_opt(report.harmonic_lower[i]),
            cell_opt(report.harmonic_upper[i]),
            cell_opt(report.ratio_lower[i]),
            cell_opt(report.ratio_upper[i]),
        ]);
    }
    t.write(a.csv.as_deref())?;
    finish("theorem2", &a, cfg, serde_json::to_value(&report)?, a.out.as_deref())
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    seq: SeqArgs,
    /// Radius profile `const:c`, `power:c,gamma`, `expinv:c,beta` or `table:<path>`
    #[arg(long)]
    profile: String,
    /// Truncation moduli R in (0, 1]
    #[arg(long, value_delimiter = ',', required = true)]
    truncations: Vec<f64>,
    /// Starting point of the walks
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, default_value = "0,0")]
    start: Point,
    /// Walks per truncation
    #[arg(long, default_value_t = 20_000)]
    walks: u64,
    #[command(flatten)]
    #[serde(flatten)]
    mc: McArgs,
    /// Output file (stdout without one)
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV flattening of the trend table
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn sweep(mut a: SweepArgs, cfg: Option<&Path>) -> CliResult<()> {
    let seq = a.seq.load()?;
    let profile = RadiusProfile::parse(&a.profile)?;
    let seed = a.mc.resolve("dichotomy-sweep")?;
    let crit = criterion_integral(&profile, 1e-10)?;
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    let mut t = Table::new(vec![
        "R",
        "n_bubbles",
        "estimate",
        "ci_low",
        "ci_high",
        "lower_union",
        "upper_single",
        "union_mass",
        "tail_sum",
    ]);
    for &r in &a.truncations {
        let domain = build_champagne(&seq, &profile, r, &[a.start])?;
        // the same seed at every R couples the walks across truncations
        let est = estimate_measure(&domain, a.start, Target::Exterior, &a.mc.params(a.walks, seed))?;
        let sw = sandwich_bounds(&domain, a.start)?;
        t.row(vec![
            cell(r),
            domain.len().to_string(),
            cell(est.estimate),
            cell(est.ci_low),
            cell(est.ci_high),
            cell(sw.lower_union),
            cell(sw.upper_single),
            cell(sw.term_sum),
            domain.tail_sum().map_or_else(String::new, cell),
        ]);
        estimates.push(est.estimate);
        rows.push(json!({
            "R": r,
            "n_bubbles": domain.len(),
            "estimate": est.estimate,
            "ci_low": est.ci_low,
            "ci_high": est.ci_high,
            "three_sigma": est.three_sigma(),
            "epsilon": est.epsilon,
            "mean_steps": est.mean_steps,
            "lower_union": sw.lower_union,
            "upper_single": sw.upper_single,
            "union_mass": sw.term_sum,
            "tail_sum": domain.tail_sum(),
        }));
    }
    t.write(a.csv.as_deref())?;
    let result = json!({
        "profile": profile_spec_string(&profile),
        "classification": crit.classification,
        "integral_value": crit.value,
        "start": a.start,
        "rows": rows,
        "trend": trend(&estimates),
    });
    finish("dichotomy-sweep", &a, cfg, result, a.out.as_deref())
}
