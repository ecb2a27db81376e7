use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_champagne"));
    c.env_remove("CHAMPAGNE_SEED_DIR");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn validator() -> jsonschema::Validator {
    let schema: Value =
        serde_json::from_str(include_str!("../schema/champagne.schema.json")).expect("schema parses");
    jsonschema::validator_for(&schema).expect("schema compiles")
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_seq_depth_three_has_fourteen_points() {
    let v = ok_json(&["gen-seq", "--ring", "q=0.5,scale=1,depth=3"]);
    assert_eq!(v["result"]["n_points"], 14);
    assert_eq!(v["result"]["points"].as_array().unwrap().len(), 14);
    assert_eq!(v["subcommand"], "gen-seq");
}

#[test]
fn criterion_expinv_integral_is_one() {
    // phi(t) = exp(-1/(1-t)) turns the integrand into e^-u on [0, inf)
    let v = ok_json(&["criterion", "--profile", "expinv:1,1"]);
    let r = &v["result"];
    assert!((r["integral_value"].as_f64().unwrap() - 1.0).abs() < 1e-8, "{r}");
    assert_eq!(r["classification"], "convergent");
}

#[test]
fn measure_on_one_bubble_fixture_is_one_half() {
    let f = fixture("one_bubble.json");
    let v = ok_json(&["measure", "--domain", f.to_str().unwrap(), "--walks", "20000", "--seed", "11"]);
    let r = &v["result"];
    // one hole at modulus 1/2 with pseudo radius 1/4: 1 - log 2 / log 4
    let exact = 1.0 - 2f64.ln() / 4f64.ln();
    let p = r["estimate"].as_f64().unwrap();
    let sigma3 = 3.0 * (exact * (1.0 - exact) / 20000.0).sqrt();
    assert!((p - exact).abs() < sigma3, "estimate {p}");
    assert_eq!(v["config"]["seed"], 11);
    assert!(r["steps_per_second"].as_f64().unwrap() > 0.0);
    let bins = r["steps_histogram_bins"].as_array().unwrap();
    let total: u64 = bins.iter().map(|b| b["count"].as_u64().unwrap()).sum();
    assert_eq!(total, 20000);
}

#[test]
fn measure_is_reproducible_for_a_seed_across_thread_counts() {
    let f = fixture("one_bubble.json");
    let d = f.to_str().unwrap();
    let a = ok_json(&["measure", "--domain", d, "--walks", "5000", "--seed", "4", "--threads", "1"]);
    let b = ok_json(&["measure", "--domain", d, "--walks", "5000", "--seed", "4", "--threads", "0"]);
    for key in ["estimate", "hits_exterior", "total_steps", "steps_histogram"] {
        assert_eq!(a["result"][key], b["result"][key], "{key}");
    }
}

#[test]
fn gen_seq_output_round_trips_through_diag() {
    let dir = tempfile::tempdir().unwrap();
    let ring = "q=0.5,scale=2,depth=6,phase_seed=5";
    for name in ["seq.csv", "seq.json"] {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        ok_json(&["gen-seq", "--ring", ring, "--out", p]);
        let diag = |src: &[&str]| {
            let mut args = vec!["diag", "--extremal-r", "0.9,0.99"];
            args.extend_from_slice(src);
            ok_json(&args)["result"].clone()
        };
        let first = diag(&["--seq", p]);
        assert_eq!(first, diag(&["--seq", p]), "{name}: repeated runs differ");
        assert_eq!(first, diag(&["--ring", ring]), "{name}: file and generator differ");
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["no-such-subcommand"],
        vec!["criterion", "--profile", "power:1,2", "--bogus"],
        vec!["criterion"],
        vec!["criterion", "--profile", "nonsense"],
        vec!["gen-seq", "--ring", "q=0.5"],
        vec!["measure", "--domain", "/nonexistent/domain.json"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn barrier_refusal_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let dom = dir.path().join("omega.json");
    let d = dom.to_str().unwrap();
    ok_json(&["build-domain", "--ring", "q=0.5,scale=1,depth=8", "--r", "0.984375", "--out", d]);
    let out = run(&["barrier", "--domain", d, "--layers", "2", "--b", "0"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let v = ok_json(&["barrier", "--domain", d]);
    let lower = v["result"]["exterior_lower"].as_f64().unwrap();
    assert!(lower > 0.0 && lower < 1.0);
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# defaults\nseed = 9\n[measure]\nwalks = 500\n[criterion]\nj_max = 10\n").unwrap();
    let f = fixture("one_bubble.json");
    let (c, d) = (cfg.to_str().unwrap(), f.to_str().unwrap());
    let v = ok_json(&["measure", "--config", c, "--domain", d]);
    assert_eq!(v["config"]["walks"], 500);
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["result"]["n_walks"], 500);
    assert_eq!(v["config"]["config_file"], c);
    let v = ok_json(&["--config", c, "measure", "--domain", d, "--walks", "600", "--seed", "1"]);
    assert_eq!(v["config"]["walks"], 600);
    assert_eq!(v["config"]["seed"], 1);
}

#[test]
fn missing_seed_is_generated_recorded_and_defaulted() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture("one_bubble.json");
    let d = f.to_str().unwrap();
    let out = bin()
        .args(["measure", "--domain", d, "--walks", "100"])
        .env("CHAMPAGNE_SEED_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let seed = v["config"]["seed"].as_u64().expect("seed is explicit");
    let log = fs::read_to_string(dir.path().join("seeds.log")).unwrap();
    assert!(log.trim_end().ends_with(&format!("measure {seed}")), "{log}");
    fs::write(dir.path().join("default_seed"), "1234\n").unwrap();
    let out = bin()
        .args(["measure", "--domain", d, "--walks", "100"])
        .env("CHAMPAGNE_SEED_DIR", dir.path())
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 1234);
}

#[test]
fn failed_writes_leave_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing_dir").join("out.json");
    let out = run(&["criterion", "--profile", "power:0.1,2", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!target.exists());
    let good = dir.path().join("out.json");
    let out = run(&["criterion", "--profile", "power:0.1,2", "--out", good.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(read_json(&good)["subcommand"], "criterion");
    let leftovers = fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1, "temporary files left behind");
}

#[test]
fn every_artifact_validates_against_the_schema() {
    let v = validator();
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (seq, dom, omega) = (p("seq.json"), p("dom.json"), p("omega.json"));
    let ring = "q=0.5,scale=2,depth=6";

    let mut docs = vec![
        ok_json(&["gen-seq", "--ring", ring]),
        ok_json(&["gen-seq", "--ring", ring, "--out", &seq]),
        ok_json(&["diag", "--seq", &seq, "--extremal-r", "0.9"]),
        ok_json(&["density", "--ring", ring, "--r-list", "0.9,0.99", "--csv", &p("density.csv")]),
        ok_json(&["criterion", "--profile", "power:0.1,2"]),
        ok_json(&["criterion", "--profile", "const:0.1", "--method", "sum"]),
        ok_json(&["build-domain", "--seq", &seq, "--profile", "power:0.1,2", "--out", &dom]),
        ok_json(&["build-domain", "--ring", "q=0.5,scale=1,depth=8", "--r", "0.984375", "--out", &omega]),
        ok_json(&["build-domain", "--ring", "q=0.5,scale=1,depth=3", "--profile", "const:0.05"]),
        ok_json(&["measure", "--domain", &dom, "--walks", "500", "--seed", "2", "--target", "all"]),
        ok_json(&["measure", "--domain", &dom, "--walks", "500", "--seed", "2", "--target", "bubble:0"]),
        ok_json(&["sandwich", "--domain", &dom, "--start", "-0.1,0.05"]),
        ok_json(&["layered", "--domain", &dom, "--walks", "200", "--seed", "3", "--csv", &p("layered.csv")]),
        ok_json(&["barrier", "--domain", &omega]),
        ok_json(&[
            "theorem2", "--ring", "q=0.5,scale=1,depth=7", "--r-list", "0.875", "--walks", "100", "--pilot-walks",
            "100", "--probe-modulus", "0.5", "--seed", "5", "--csv", &p("theorem2.csv"),
        ]),
        ok_json(&[
            "dichotomy-sweep", "--ring", ring, "--profile", "power:0.1,2", "--truncations", "0.8,0.99", "--walks",
            "300", "--seed", "6", "--csv", &p("sweep.csv"),
        ]),
    ];
    docs.push(read_json(Path::new(&seq)));
    docs.push(read_json(Path::new(&dom)));
    docs.push(read_json(Path::new(&omega)));
    docs.push(read_json(&fixture("one_bubble.json")));
    for doc in &docs {
        assert_valid(&v, doc);
    }
    for csv in ["density.csv", "layered.csv", "theorem2.csv", "sweep.csv"] {
        let text = fs::read_to_string(dir.path().join(csv)).unwrap();
        assert!(text.lines().count() >= 2, "{csv}: {text}");
    }
    // a result that breaks its subcommand's shape is rejected
    let mut bad = docs[4].clone();
    bad["result"]["classification"] = Value::from("maybe");
    assert!(!v.is_valid(&bad));
    let mut unseeded = docs[9].clone();
    unseeded["config"].as_object_mut().unwrap().remove("seed");
    assert!(!v.is_valid(&unseeded));
}

#[test]
fn sweep_shows_decay_for_a_divergent_profile() {
    // const profile: every ring adds the same union mass, so the exterior
    // measure keeps falling as R grows
    let v = ok_json(&[
        "dichotomy-sweep", "--ring", "q=0.5,scale=2,depth=7", "--profile", "const:0.02", "--truncations",
        "0.6,0.9,0.99", "--walks", "4000", "--seed", "8",
    ]);
    let r = &v["result"];
    assert_eq!(r["classification"], "divergent");
    assert_eq!(r["trend"], "decreasing");
}
