//! Python bindings. Points are `(re, im)` tuples; structured results come
//! back as the dicts of their JSON form.

use champagne::barriers::{annulus_log_blaschke, DEFAULT_BOUNDARY_SAMPLES};
use champagne::harmonic_density::HarmonicMc;
use champagne::io::{domain_from_json, domain_to_json, read_domain, read_sequence, sequence_to_csv};
use champagne::walker::{wilson_interval as wilson, DEFAULT_STEP_BUDGET};
use champagne::{
    barrier_lower_bound, barrier_weights as weights, blaschke_sum, build_champagne, build_finitely_connected,
    criterion_integral, criterion_sum, estimate_measure, extremal_c, extremal_d, generate_ring_lattice, layered_crossing,
    log_blaschke as log_b, mobius_apply, one_hole_exact as one_hole, pseudo_distance as rho, pseudo_to_euclidean as p2e,
    sandwich_bounds, separation, theorem2_report, uniform_density, ChampagneDomain, Component, DeltaRule, DensityMode,
    Error, McParams, Point, PointSequence, ProbeSet, PseudoDisk, RadiusProfile, RingLattice, Target, WeightScheme,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(champagne_py, RefusalError, PyRuntimeError, "The numerics declined a well-formed request.");

type Xy = (f64, f64);

fn pt((re, im): Xy) -> Point {
    Point::new(re, im)
}

fn xy(p: Point) -> Xy {
    (p.re, p.im)
}

fn py_err(e: Error) -> PyErr {
    if e.is_refusal() {
        return RefusalError::new_err(e.to_string());
    }
    match e {
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn lift<T>(r: champagne::Result<T>) -> PyResult<T> {
    r.map_err(py_err)
}

/// JSON form of `v` as Python objects.
fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    lift(s.parse())
}

#[pyclass(name = "PointSequence", module = "champagne_py", frozen)]
pub struct PySequence {
    inner: PointSequence,
}

#[pymethods]
impl PySequence {
    #[new]
    #[pyo3(signature = (points, label = "python"))]
    fn new(points: Vec<Xy>, label: &str) -> PyResult<Self> {
        let inner = lift(PointSequence::new(points.into_iter().map(pt).collect(), label))?;
        Ok(PySequence { inner })
    }

    /// Rings `|z| = 1 - q^j` with `ceil(scale q^-j)` points each.
    #[staticmethod]
    #[pyo3(signature = (q, scale, depth, phase_seed = None))]
    fn ring_lattice(q: f64, scale: f64, depth: u32, phase_seed: Option<u64>) -> PyResult<Self> {
        let mut p = RingLattice::new(q, scale, depth);
        p.phase_seed = phase_seed;
        Ok(PySequence {
            inner: lift(generate_ring_lattice(&p))?,
        })
    }

    /// CSV or, for a `.json` extension, JSON.
    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(PySequence {
            inner: lift(read_sequence(path.as_ref()))?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("PointSequence(n={}, label={:?})", self.inner.len(), self.inner.label())
    }

    fn points(&self) -> Vec<Xy> {
        self.inner.points().iter().map(|&p| xy(p)).collect()
    }

    fn to_csv(&self) -> String {
        sequence_to_csv(&self.inner)
    }

    fn separation<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &separation(&self.inner))
    }

    #[pyo3(signature = (probe_modulus = 0.9, grid_density = 4))]
    fn covering_radius(&self, probe_modulus: f64, grid_density: u32) -> PyResult<f64> {
        lift(champagne::covering_radius(&self.inner, probe_modulus, grid_density))
    }

    #[pyo3(signature = (divergence_threshold = 10.0))]
    fn blaschke_sum<'py>(&self, py: Python<'py>, divergence_threshold: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &blaschke_sum(&self.inner, divergence_threshold))
    }

    #[pyo3(signature = (r_values, probe_modulus = 0.9, grid_density = 4, mode = "lower"))]
    fn uniform_density<'py>(
        &self,
        py: Python<'py>,
        r_values: Vec<f64>,
        probe_modulus: f64,
        grid_density: u32,
        mode: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mode: DensityMode = parse(mode)?;
        let probes = lift(ProbeSet::pseudo_grid(probe_modulus, grid_density))?;
        let est = py.detach(|| uniform_density(&self.inner, &r_values, &probes, mode));
        to_py(py, &lift(est)?)
    }

    /// `log|B_z(z)|` over the zeros with `1/2 < rho(z, lambda) < r`.
    fn annulus_log_blaschke(&self, z: Xy, r: f64) -> f64 {
        annulus_log_blaschke(&self.inner, pt(z), r)
    }

    /// `(c(r), d(r))` with `c` taken over a pseudohyperbolic probe grid.
    #[pyo3(signature = (r, probe_modulus = 0.9, grid_density = 4))]
    fn extremal<'py>(&self, py: Python<'py>, r: f64, probe_modulus: f64, grid_density: u32) -> PyResult<Bound<'py, PyAny>> {
        let probes = lift(ProbeSet::pseudo_grid(probe_modulus, grid_density))?;
        let c = lift(extremal_c(&self.inner, r, &probes))?;
        let d = lift(extremal_d(&self.inner, r))?;
        to_py(py, &serde_json::json!({"c": c, "d": d}))
    }
}

#[pyclass(name = "RadiusProfile", module = "champagne_py", frozen)]
pub struct PyProfile {
    inner: RadiusProfile,
}

#[pymethods]
impl PyProfile {
    /// `const:c`, `power:c,gamma`, `expinv:c,beta` or `table:<path>`.
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(PyProfile {
            inner: lift(RadiusProfile::parse(spec))?,
        })
    }

    fn __repr__(&self) -> String {
        format!("RadiusProfile({:?})", champagne::domains::profile_spec_string(&self.inner))
    }

    /// `phi(t)`, or `None` past the end of a table.
    fn __call__(&self, t: f64) -> Option<f64> {
        self.inner.eval(t)
    }

    #[pyo3(signature = (tail_tolerance = 1e-10))]
    fn criterion_integral<'py>(&self, py: Python<'py>, tail_tolerance: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &lift(criterion_integral(&self.inner, tail_tolerance))?)
    }

    #[pyo3(signature = (k = 2.0, j_max = 10_000))]
    fn criterion_sum<'py>(&self, py: Python<'py>, k: f64, j_max: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &lift(criterion_sum(&self.inner, k, j_max))?)
    }
}

#[pyclass(name = "ChampagneDomain", module = "champagne_py", frozen)]
pub struct PyDomain {
    inner: ChampagneDomain,
}

fn component_name(c: Component) -> String {
    match c {
        Component::Exterior => "exterior".into(),
        Component::Bubble(k) => format!("bubble:{k}"),
        Component::TruncationShell => "truncation_shell".into(),
    }
}

#[pymethods]
impl PyDomain {
    /// Bubbles `D(lambda, phi(|lambda|))` for `|lambda| <= truncation`.
    #[staticmethod]
    #[pyo3(signature = (seq, profile, truncation = 1.0, starts = vec![(0.0, 0.0)]))]
    fn build(seq: &PySequence, profile: &PyProfile, truncation: f64, starts: Vec<Xy>) -> PyResult<Self> {
        let starts: Vec<Point> = starts.into_iter().map(pt).collect();
        Ok(PyDomain {
            inner: lift(build_champagne(&seq.inner, &profile.inner, truncation, &starts))?,
        })
    }

    /// `Omega(z, r)`; `delta` is `one-minus-r` or `table:<path>`.
    #[staticmethod]
    #[pyo3(signature = (seq, center, r, delta = "one-minus-r"))]
    fn finitely_connected(seq: &PySequence, center: Xy, r: f64, delta: &str) -> PyResult<Self> {
        let rule = lift(DeltaRule::parse(delta))?;
        Ok(PyDomain {
            inner: lift(build_finitely_connected(&seq.inner, pt(center), r, &rule))?,
        })
    }

    /// Bubbles given as `(cx, cy, radius)` or `(cx, cy, radius, source_index)`.
    #[staticmethod]
    #[pyo3(signature = (disks, truncation = 1.0))]
    fn from_disks(disks: Vec<Vec<f64>>, truncation: f64) -> PyResult<Self> {
        let mut list = Vec::with_capacity(disks.len());
        for (i, d) in disks.iter().enumerate() {
            let (c, r, src) = match d.as_slice() {
                [cx, cy, r] => (Point::new(*cx, *cy), *r, i),
                [cx, cy, r, s] if *s >= 0.0 && s.fract() == 0.0 => (Point::new(*cx, *cy), *r, *s as usize),
                _ => return Err(PyValueError::new_err(format!("disk {i} must be (cx, cy, radius[, source_index])"))),
            };
            list.push((lift(champagne::EuclideanDisk::new(c, r))?, src));
        }
        Ok(PyDomain {
            inner: lift(ChampagneDomain::from_disks(&list, truncation))?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyDomain {
            inner: lift(domain_from_json(text))?,
        })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(PyDomain {
            inner: lift(read_domain(path.as_ref()))?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        lift(domain_to_json(&self.inner))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("ChampagneDomain(bubbles={}, truncation_R={})", self.inner.len(), self.inner.truncation_r())
    }

    /// `(cx, cy, radius, source_index)` per bubble.
    fn bubbles(&self) -> Vec<(f64, f64, f64, usize)> {
        self.inner
            .bubbles()
            .iter()
            .map(|b| (b.disk.center.re, b.disk.center.im, b.disk.radius, b.source_index))
            .collect()
    }

    #[getter]
    fn truncation_r(&self) -> f64 {
        self.inner.truncation_r()
    }

    #[getter]
    fn tail_sum(&self) -> Option<f64> {
        self.inner.tail_sum()
    }

    #[getter]
    fn circumference_sum(&self) -> f64 {
        self.inner.circumference_sum()
    }

    #[getter]
    fn default_epsilon(&self) -> f64 {
        self.inner.default_epsilon()
    }

    /// `(distance, component)` with component `exterior` or `bubble:<k>`.
    fn distance_to_boundary(&self, z: Xy) -> PyResult<(f64, String)> {
        let (d, c) = lift(self.inner.distance_to_boundary(pt(z)))?;
        Ok((d, component_name(c)))
    }

    #[pyo3(signature = (start = (0.0, 0.0), target = "exterior", walks = 100_000, seed = 0, epsilon = None, threads = 0, step_budget = DEFAULT_STEP_BUDGET))]
    #[allow(clippy::too_many_arguments)]
    fn measure<'py>(
        &self,
        py: Python<'py>,
        start: Xy,
        target: &str,
        walks: u64,
        seed: u64,
        epsilon: Option<f64>,
        threads: usize,
        step_budget: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let target: Target = parse(target)?;
        let mut p = McParams::new(walks, seed).with_threads(threads);
        p.epsilon = epsilon;
        p.step_budget = step_budget;
        let est = py.detach(|| estimate_measure(&self.inner, pt(start), target, &p));
        to_py(py, &lift(est)?)
    }

    #[pyo3(signature = (start = (0.0, 0.0)))]
    fn sandwich<'py>(&self, py: Python<'py>, start: Xy) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &lift(sandwich_bounds(&self.inner, pt(start)))?)
    }

    #[pyo3(signature = (eta = 0.5, layers = None, b = None, start = (0.0, 0.0), samples = DEFAULT_BOUNDARY_SAMPLES))]
    fn barrier<'py>(
        &self,
        py: Python<'py>,
        eta: f64,
        layers: Option<usize>,
        b: Option<f64>,
        start: Xy,
        samples: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cert = py.detach(|| barrier_lower_bound(&self.inner, eta, layers, b, pt(start), samples));
        to_py(py, &lift(cert)?)
    }

    #[pyo3(signature = (k = 2.0, j_max = 3, grid = 8, walks = 10_000, seed = 0, epsilon = None, threads = 0))]
    #[allow(clippy::too_many_arguments)]
    fn layered<'py>(
        &self,
        py: Python<'py>,
        k: f64,
        j_max: usize,
        grid: usize,
        walks: u64,
        seed: u64,
        epsilon: Option<f64>,
        threads: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let mut p = McParams::new(walks, seed).with_threads(threads);
        p.epsilon = epsilon;
        let lc = py.detach(|| layered_crossing(&self.inner, k, j_max, grid, &p));
        to_py(py, &lift(lc)?)
    }
}

/// Pseudohyperbolic distance `|z - w| / |1 - conj(w) z|`.
#[pyfunction]
fn pseudo_distance(z: Xy, w: Xy) -> PyResult<f64> {
    lift(rho(pt(z), pt(w)))
}

/// `phi_a(z) = (a - z) / (1 - conj(a) z)`.
#[pyfunction]
fn mobius(a: Xy, z: Xy) -> PyResult<Xy> {
    lift(mobius_apply(pt(a), pt(z))).map(xy)
}

/// Euclidean `(center, radius)` of the pseudohyperbolic disk `D(center, r)`.
#[pyfunction]
fn pseudo_to_euclidean(center: Xy, r: f64) -> PyResult<(Xy, f64)> {
    let e = p2e(lift(PseudoDisk::new(pt(center), r))?);
    Ok((xy(e.center), e.radius))
}

/// Exterior measure at 0 of the disk minus one pseudohyperbolic hole.
#[pyfunction]
fn one_hole_exact(zeta: Xy, s: f64) -> PyResult<f64> {
    lift(one_hole(pt(zeta), s))
}

#[pyfunction]
fn log_blaschke(zeros: Vec<Xy>, z: Xy) -> PyResult<f64> {
    let zeros: Vec<Point> = zeros.into_iter().map(pt).collect();
    lift(log_b(&zeros, pt(z)))
}

/// 95% Wilson score interval.
#[pyfunction]
fn wilson_interval(hits: u64, n: u64) -> Xy {
    wilson(hits, n)
}

/// Weight scheme `lower` or `upper`.
#[pyfunction]
#[pyo3(signature = (a, b, n, scheme = "lower"))]
fn barrier_weights<'py>(py: Python<'py>, a: f64, b: f64, n: usize, scheme: &str) -> PyResult<Bound<'py, PyAny>> {
    let scheme = match scheme {
        "lower" => WeightScheme::Lower,
        "upper" => WeightScheme::Upper,
        other => return Err(PyValueError::new_err(format!("scheme must be lower or upper, got {other}"))),
    };
    to_py(py, &lift(weights(a, b, n, scheme))?)
}

/// Uniform and harmonic densities side by side on a probe grid.
#[pyfunction]
#[pyo3(signature = (seq, r_values, walks = 1_000, seed = 0, probe_modulus = 0.85, grid_density = 1, upper_modulus = 0.5, epsilon = None, threads = 0))]
#[allow(clippy::too_many_arguments)]
fn theorem2<'py>(
    py: Python<'py>,
    seq: &PySequence,
    r_values: Vec<f64>,
    walks: u64,
    seed: u64,
    probe_modulus: f64,
    grid_density: u32,
    upper_modulus: f64,
    epsilon: Option<f64>,
    threads: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let probes = lift(ProbeSet::pseudo_grid(probe_modulus, grid_density))?;
    let mut mc = HarmonicMc::new(walks, seed);
    mc.epsilon = epsilon;
    mc.threads = threads;
    let report = py.detach(|| theorem2_report(&seq.inner, &r_values, &probes, upper_modulus, &mc));
    to_py(py, &lift(report)?)
}

#[pymodule]
pub fn champagne_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("RefusalError", m.py().get_type::<RefusalError>())?;
    m.add_class::<PySequence>()?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyDomain>()?;
    m.add_function(wrap_pyfunction!(pseudo_distance, m)?)?;
    m.add_function(wrap_pyfunction!(mobius, m)?)?;
    m.add_function(wrap_pyfunction!(pseudo_to_euclidean, m)?)?;
    m.add_function(wrap_pyfunction!(one_hole_exact, m)?)?;
    m.add_function(wrap_pyfunction!(log_blaschke, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(barrier_weights, m)?)?;
    m.add_function(wrap_pyfunction!(theorem2, m)?)?;
    Ok(())
}
