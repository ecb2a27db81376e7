//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.
//! Criteria share one test so the performance measurement runs alone.

use std::io::Write;
use std::time::Instant;

use champagne::barriers::{barrier_lower_bound, barrier_weights, log_blaschke, WeightScheme};
use champagne::domains::{build_champagne, build_finitely_connected, criterion_integral, criterion_sum, Classification, DeltaRule, RadiusProfile};
use champagne::harmonic_density::{harmonic_density_curve, HarmonicMc};
use champagne::hyperbolic::{mobius_apply, pseudo_distance, Point, PseudoDisk};
use champagne::sequences::{generate_ring_lattice, uniform_density, DensityMode, PointSequence, ProbeSet, RingLattice};
use champagne::walker::{estimate_measure, one_hole_exact, sandwich_bounds, three_sigma, McParams, Target};
use champagne::ChampagneDomain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Report {
    hard_failures: Vec<String>,
}

impl Report {
    fn line(&mut self, n: u32, pass: bool, hard: bool, detail: String) {
        // the stdout handle bypasses libtest capture, so the report always shows
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "criterion {n}: {} {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass && hard {
            self.hard_failures.push(format!("criterion {n}: {detail}"));
        }
    }
}

fn rand_point(rng: &mut ChaCha8Rng, max_modulus: f64) -> Point {
    Point::polar(max_modulus * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>())
}

fn one_hole_configs(rep: &mut Report) {
    let configs = [(0.3, 0.05), (0.5, 0.05), (0.8, 0.05), (0.5, 0.25), (0.8, 0.25)];
    let mut worst = 0.0f64;
    let mut ok = true;
    for (i, &(m, s)) in configs.iter().enumerate() {
        let zeta = Point::polar(m, 0.7 * i as f64);
        let d = ChampagneDomain::from_pseudo(&[(PseudoDisk::new(zeta, s).unwrap(), 0)], 1.0).unwrap();
        let est = estimate_measure(&d, Point::ZERO, Target::Bubble(0), &McParams::new(100_000, 100 + i as u64).with_epsilon(1e-6)).unwrap();
        let exact = one_hole_exact(zeta, s).unwrap();
        let err = (est.estimate - exact).abs();
        let tol = est.three_sigma().max(0.01);
        worst = worst.max(err / tol);
        ok &= err <= tol;
    }
    rep.line(1, ok, true, format!("one-hole exactness, worst error/tolerance {worst:.3}"));
}

fn criterion_closed_forms(rep: &mut Report) {
    let mut ok = true;
    let e1 = RadiusProfile::exp_inverse(1.0, 1.0).unwrap();
    let e2 = RadiusProfile::exp_inverse(1.0, 2.0).unwrap();
    let pw = RadiusProfile::power_law(0.1, 2.0).unwrap();
    let i1 = criterion_integral(&e1, 1e-10).unwrap();
    let s1 = criterion_sum(&e1, 2.0, 10_000).unwrap();
    let i2 = criterion_integral(&e2, 1e-10).unwrap();
    ok &= (i1.value - 1.0).abs() <= 1e-6 && (s1.value - 1.0).abs() <= 1e-6 && (i2.value - 0.5).abs() <= 1e-6;
    ok &= criterion_integral(&pw, 1e-10).unwrap().classification == Classification::Divergent;
    ok &= criterion_sum(&pw, 2.0, 10_000).unwrap().classification == Classification::Divergent;
    let builtins = [
        RadiusProfile::constant(0.3).unwrap(),
        RadiusProfile::power_law(0.1, 2.0).unwrap(),
        RadiusProfile::power_law(0.5, 0.5).unwrap(),
        RadiusProfile::exp_inverse(1.0, 1.0).unwrap(),
        RadiusProfile::exp_inverse(1.0, 2.0).unwrap(),
        RadiusProfile::exp_inverse(0.5, 0.5).unwrap(),
    ];
    let mut agree = 0;
    for p in &builtins {
        let ci = criterion_integral(p, 1e-10).unwrap().classification;
        for k in [2.0, 4.0, 10.0] {
            let cs = criterion_sum(p, k, 10_000).unwrap().classification;
            if cs == ci && ci != Classification::Inconclusive {
                agree += 1;
            } else {
                ok = false;
            }
        }
    }
    rep.line(
        2,
        ok,
        true,
        format!(
            "integral {:.9} sum {:.9} second {:.9}; classifications agree on {agree}/18",
            i1.value, s1.value, i2.value
        ),
    );
}

fn sandwich(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ok = true;
    let mut built = 0;
    let mut worst = f64::NEG_INFINITY;
    while built < 20 {
        let scale = [1.0, 2.0][rng.random_range(0..2)];
        let lattice = RingLattice::new(0.5, scale, 7).with_phase_seed(rng.random());
        let seq = generate_ring_lattice(&lattice).unwrap();
        let z = rand_point(&mut rng, 0.4);
        let r = 1.0 - 0.5f64.powf(rng.random_range(2.5..4.5));
        let delta = rng.random_range(0.2..1.0) * (1.0 - r);
        let rule = DeltaRule::Table { knots: vec![(r, delta)] };
        let Ok(d) = build_finitely_connected(&seq, z, r, &rule) else { continue };
        if d.is_empty() {
            continue;
        }
        built += 1;
        let b = sandwich_bounds(&d, z).unwrap();
        let est = estimate_measure(&d, z, Target::Exterior, &McParams::new(20_000, built)).unwrap();
        let slack = est.three_sigma();
        let excess = (b.lower_union - slack - est.estimate).max(est.estimate - b.upper_single - slack);
        worst = worst.max(excess);
        ok &= excess <= 0.0;
    }
    rep.line(3, ok, true, format!("sandwich on 20 domains, worst excess over 3 sigma {worst:.4}"));
}

fn barrier(rep: &mut Report) {
    let mut ok = true;
    let mut one_layer_err = 0.0f64;
    for &(m, delta) in &[(0.5, 0.25), (0.7, 0.05), (0.95, 0.01), (0.3, 0.2)] {
        let zeta = Point::polar(m, 1.1);
        let d = ChampagneDomain::from_pseudo(&[(PseudoDisk::new(zeta, delta).unwrap(), 0)], 1.0).unwrap();
        let cert = barrier_lower_bound(&d, 0.5, None, None, Point::ZERO, 64).unwrap();
        one_layer_err = one_layer_err.max((cert.exterior_lower - (1.0 - one_hole_exact(zeta, delta).unwrap())).abs());
    }
    ok &= one_layer_err <= 1e-12;

    let mut worst = f64::NEG_INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..10u64 {
        let scale = [1.0, 2.0][(i % 2) as usize];
        let seq = generate_ring_lattice(&RingLattice::new(0.5, scale, 8).with_phase_seed(rng.random())).unwrap();
        let r = 1.0 - 0.5f64.powi(4 + (i % 3) as i32);
        let d = build_finitely_connected(&seq, Point::ZERO, r, &DeltaRule::OneMinusR).unwrap();
        let cert = barrier_lower_bound(&d, 0.5, None, None, Point::ZERO, 64).unwrap();
        let est = estimate_measure(&d, Point::ZERO, Target::Exterior, &McParams::new(20_000, 40 + i)).unwrap();
        let excess = cert.exterior_lower - est.estimate - est.three_sigma();
        worst = worst.max(excess);
        ok &= excess <= 0.0;
    }

    let mut recursion_ok = true;
    for &a in &[0.5, 1.0, 2.0, 3.7, 10.0] {
        for &frac in &[0.0, 0.1, 0.5, 0.9, 0.999] {
            for n in [1usize, 2, 5, 20] {
                let b = a * frac;
                let w = barrier_weights(a, b, n, WeightScheme::Lower).unwrap().weights;
                for i in 0..n - 1 {
                    let (lhs, rhs) = (a * w[i], (a - b) * w[i + 1]);
                    recursion_ok &= (lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs.abs();
                }
            }
        }
    }
    ok &= recursion_ok;
    rep.line(
        4,
        ok,
        true,
        format!("one-layer error {one_layer_err:.2e}, worst barrier excess over MC+3 sigma {worst:.4}, recursion holds: {recursion_ok}"),
    );
}

fn dichotomy(rep: &mut Report) {
    let seq = generate_ring_lattice(&RingLattice::new(0.5, 2.0, 12)).unwrap();
    let rs: Vec<f64> = [4, 6, 8].iter().map(|&k| 1.0 - 0.5f64.powi(k)).collect();
    // (estimate, 3 sigma, union-bound mass of the bubbles present)
    let run = |p: &RadiusProfile| -> Vec<(f64, f64, f64)> {
        rs.iter()
            .map(|&r| {
                let d = build_champagne(&seq, p, r, &[Point::ZERO]).unwrap();
                let est = estimate_measure(&d, Point::ZERO, Target::Exterior, &McParams::new(100_000, 5)).unwrap();
                (est.estimate, est.three_sigma(), sandwich_bounds(&d, Point::ZERO).unwrap().term_sum)
            })
            .collect()
    };
    let conv = RadiusProfile::exp_inverse(1.0, 1.0).unwrap();
    let sum = criterion_sum(&conv, 2.0, 10_000).unwrap();
    let threshold = 1.0 - (sum.value - sum.partial_sums[0]);
    let c = run(&conv);
    let ce: Vec<f64> = c.iter().map(|x| x.0).collect();
    let (dec1, dec2) = (ce[0] - ce[1], ce[1] - ce[2]);
    let above_threshold = ce.iter().all(|&e| e > threshold);
    let geometric = dec1 > 0.0 && dec2 < 0.5 * dec1;
    // adding bubbles can remove at most their union-bound mass
    let union_tail_ok = c[1..].iter().all(|x| x.0 + x.1 + c[0].1 >= c[0].0 - (x.2 - c[0].2));
    let div = RadiusProfile::power_law(0.1, 2.0).unwrap();
    let v: Vec<f64> = run(&div).iter().map(|x| x.0).collect();
    let div_ok = v[0] > v[1] && v[1] > v[2] && v[2] < 0.5;
    let pass = above_threshold && geometric && union_tail_ok && div_ok;
    rep.line(
        5,
        pass,
        !(geometric && union_tail_ok && div_ok),
        format!(
            "convergent {ce:.4?} vs bound {threshold:.4} (attained: {above_threshold}), decrement ratio {:.3}, \
             union-tail bound holds: {union_tail_ok}; divergent {v:.4?}",
            dec2 / dec1
        ),
    );
}

fn theorem2(rep: &mut Report) {
    let r = 1.0 - 0.5f64.powi(8);
    let probes = ProbeSet::pseudo_grid(0.85, 1).unwrap();
    let curve = |scale: f64, walks: u64| {
        let seq = generate_ring_lattice(&RingLattice::new(0.5, scale, 12)).unwrap();
        let u = uniform_density(&seq, &[r], &probes, DensityMode::Lower).unwrap().lower_curve[0];
        let h = harmonic_density_curve(&seq, &[r], DensityMode::Lower, &probes, 0.0, &HarmonicMc::new(walks, 6)).unwrap();
        (u, h.per_r[0].value.unwrap_or(f64::INFINITY))
    };
    let (u2, h2) = curve(2.0, 400);
    let (u4, h4) = curve(4.0, 200);
    let agree = h2 / u2;
    let (ru, rh) = (u4 / u2, h4 / h2);
    let ratios_ok = (1.5..=2.5).contains(&ru) && (1.5..=2.5).contains(&rh);
    let pass = (0.5..=2.0).contains(&agree) && ratios_ok;
    // agreement between factors 2 and 3 is reported but tolerated
    let hard_ok = (1.0 / 3.0..=3.0).contains(&agree) && ratios_ok;
    let _ = writeln!(
        std::io::stdout().lock(),
        "criterion 6 detail: uniform {u2:.3}/{u4:.3}, harmonic {h2:.3}/{h4:.3}"
    );
    rep.line(
        6,
        pass,
        !hard_ok,
        format!("harmonic/uniform {agree:.3} at scale 2; scale-4/scale-2 ratios uniform {ru:.3} harmonic {rh:.3}"),
    );
}

fn invariance(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut rho_err = 0.0f64;
    let mut blaschke_err = 0.0f64;
    for _ in 0..10_000 {
        let (a, z, w) = (rand_point(&mut rng, 0.99), rand_point(&mut rng, 0.99), rand_point(&mut rng, 0.99));
        let before = pseudo_distance(z, w).unwrap();
        let after = pseudo_distance(mobius_apply(a, z).unwrap(), mobius_apply(a, w).unwrap()).unwrap();
        rho_err = rho_err.max((before - after).abs());
        let zeros: Vec<Point> = (0..5).map(|_| rand_point(&mut rng, 0.95)).collect();
        let moved: Vec<Point> = zeros.iter().map(|&x| mobius_apply(a, x).unwrap()).collect();
        let lb = log_blaschke(&zeros, z).unwrap();
        let la = log_blaschke(&moved, mobius_apply(a, z).unwrap()).unwrap();
        blaschke_err = blaschke_err.max((lb - la).abs() / lb.abs().max(1.0));
    }
    let seq = generate_ring_lattice(&RingLattice::new(0.5, 2.0, 7)).unwrap();
    let d = build_finitely_connected(&seq, Point::ZERO, 1.0 - 0.5f64.powi(4), &DeltaRule::OneMinusR).unwrap();
    let p = McParams::new(20_000, 70);
    let base = estimate_measure(&d, Point::ZERO, Target::Exterior, &p).unwrap();
    let mut wos_ok = true;
    let mut worst = 0.0f64;
    for i in 0..4u64 {
        let a = rand_point(&mut rng, 0.6);
        let moved = d.transported(a).unwrap();
        let est = estimate_measure(&moved, a, Target::Exterior, &McParams::new(20_000, 71 + i)).unwrap();
        let tol = (three_sigma(base.estimate, 20_000).powi(2) + est.three_sigma().powi(2)).sqrt();
        worst = worst.max((est.estimate - base.estimate).abs() / tol);
        wos_ok &= (est.estimate - base.estimate).abs() <= tol;
    }
    let max_threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let runs: Vec<String> = [1, 4, max_threads]
        .iter()
        .map(|&t| serde_json::to_string(&estimate_measure(&d, Point::ZERO, Target::Exterior, &p.with_threads(t)).unwrap()).unwrap())
        .collect();
    let deterministic = runs.windows(2).all(|w| w[0] == w[1]);
    let ok = rho_err <= 1e-12 && blaschke_err <= 1e-10 && wos_ok && deterministic;
    rep.line(
        7,
        ok,
        true,
        format!("rho {rho_err:.1e}, log_blaschke {blaschke_err:.1e}, WoS worst diff/3 sigma {worst:.2}, byte-identical across threads: {deterministic}"),
    );
}

fn performance(rep: &mut Report) {
    let seq = generate_ring_lattice(&RingLattice::new(0.5, 5.0, 11)).unwrap();
    let seq = PointSequence::new(seq.points().iter().copied().take(10_000).collect(), "ten thousand").unwrap();
    let d = build_champagne(&seq, &RadiusProfile::power_law(0.1, 2.0).unwrap(), 1.0, &[Point::ZERO]).unwrap();
    assert_eq!(d.len(), 10_000);
    let t = Instant::now();
    let est = estimate_measure(&d, Point::ZERO, Target::Exterior, &McParams::new(20_000, 8).with_threads(1)).unwrap();
    let rate = est.total_steps as f64 / t.elapsed().as_secs_f64();
    rep.line(8, rate >= 1e5, false, format!("{rate:.3e} WoS steps/s on one core with 10^4 bubbles (soft target 1e5)"));
}

#[test]
fn acceptance() {
    let mut rep = Report { hard_failures: vec![] };
    one_hole_configs(&mut rep);
    criterion_closed_forms(&mut rep);
    sandwich(&mut rep);
    barrier(&mut rep);
    dichotomy(&mut rep);
    theorem2(&mut rep);
    invariance(&mut rep);
    performance(&mut rep);
    assert!(rep.hard_failures.is_empty(), "{:#?}", rep.hard_failures);
}
