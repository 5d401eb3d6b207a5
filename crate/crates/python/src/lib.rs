use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bistream_core::baselines::{FleetConfig, FleetState, FleetVariant};
use bistream_core::estimator::EstimatorState;
use bistream_core::exact;
use bistream_core::harness::{self, Algorithm, TruthLimit};
use bistream_core::stream::{BipartiteSnapshot, Side, StreamRecord};
use bistream_core::synth::{generate_stream, BaConfig, StampMode};
use bistream_core::windowing::WindowConfig;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn side(name: &str) -> PyResult<Side> {
    match name {
        "i" => Ok(Side::I),
        "j" => Ok(Side::J),
        _ => Err(PyValueError::new_err(format!("side must be 'i' or 'j', got {name:?}"))),
    }
}

fn to_records(records: Vec<(u64, u32, u32)>) -> Vec<StreamRecord> {
    records.into_iter().map(|(tau, i, j)| StreamRecord::new(tau, i, j)).collect()
}

/// Bipartite graph with separate i and j vertex id spaces.
#[pyclass(name = "Snapshot")]
#[derive(Default)]
struct PySnapshot {
    inner: BipartiteSnapshot,
}

#[pymethods]
impl PySnapshot {
    #[new]
    #[pyo3(signature = (edges=None))]
    fn new(edges: Option<Vec<(u32, u32)>>) -> Self {
        PySnapshot {
            inner: BipartiteSnapshot::from_edges(edges.unwrap_or_default()),
        }
    }

    #[pyo3(signature = (i, j, tau=0))]
    fn insert_edge(&mut self, i: u32, j: u32, tau: u64) -> bool {
        self.inner.insert_edge(i, j, tau)
    }

    fn remove_edge(&mut self, i: u32, j: u32) -> bool {
        self.inner.remove_edge(i, j)
    }

    fn contains_edge(&self, i: u32, j: u32) -> bool {
        self.inner.contains_edge(i, j)
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn vertex_count(&self, side_name: &str) -> PyResult<usize> {
        Ok(self.inner.vertex_count(side(side_name)?))
    }

    fn degree(&self, v: u32, side_name: &str) -> PyResult<Option<usize>> {
        Ok(self.inner.degree(v, side(side_name)?))
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.sorted_edges()
    }

    fn count_butterflies(&self) -> u64 {
        exact::count_butterflies(&self.inner)
    }

    fn incident_butterflies(&self, i: u32, j: u32) -> PyResult<u64> {
        exact::count_incident_butterflies(&self.inner, i, j).map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.inner.edge_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Snapshot(edges={}, i_vertices={}, j_vertices={})",
            self.inner.edge_count(),
            self.inner.vertex_count(Side::I),
            self.inner.vertex_count(Side::J)
        )
    }
}

#[pyfunction]
fn count_butterflies(edges: Vec<(u32, u32)>) -> u64 {
    exact::count_butterflies(&BipartiteSnapshot::from_edges(edges))
}

#[pyfunction]
#[pyo3(signature = (edges, cap=exact::DEFAULT_BRUTE_FORCE_CAP))]
fn brute_force_count(edges: Vec<(u32, u32)>, cap: usize) -> PyResult<u64> {
    exact::brute_force_count_capped(&BipartiteSnapshot::from_edges(edges), cap).map_err(value_err)
}

/// Returns `{"i": {vertex: support}, "j": {...}}`.
#[pyfunction]
fn butterfly_support<'py>(py: Python<'py>, edges: Vec<(u32, u32)>) -> PyResult<Bound<'py, PyDict>> {
    let s = exact::butterfly_support(&BipartiteSnapshot::from_edges(edges));
    let out = PyDict::new(py);
    for (name, map) in [("i", &s.i), ("j", &s.j)] {
        let d = PyDict::new(py);
        for (v, c) in map {
            d.set_item(v, c)?;
        }
        out.set_item(name, d)?;
    }
    Ok(out)
}

/// Preferential-attachment stream as time-sorted `(tau, i, j)` tuples.
#[pyfunction]
#[pyo3(signature = (n, m, lo=0, hi=1000, seed=0))]
fn generate_ba(n: usize, m: usize, lo: u64, hi: u64, seed: u64) -> PyResult<Vec<(u64, u32, u32)>> {
    let src = generate_stream(
        &BaConfig::new(n, m, seed),
        &StampMode::Random {
            lo,
            hi,
            seed: seed.wrapping_add(1),
        },
    )
    .map_err(value_err)?;
    Ok(src.records().iter().map(|r| (r.tau, r.i, r.j)).collect())
}

#[pyfunction]
#[pyo3(signature = (records, nt_per_window, windows=None, prefix=None))]
fn ground_truth(records: Vec<(u64, u32, u32)>, nt_per_window: usize, windows: Option<usize>, prefix: Option<usize>) -> PyResult<Vec<u64>> {
    let cfg = WindowConfig::new(nt_per_window).map_err(value_err)?;
    harness::ground_truth_series(&to_records(records), cfg, TruthLimit { records: prefix, windows }).map_err(value_err)
}

/// Per-window cumulative estimates. With `truth` and `supervised` > 0 the
/// supervised variant runs on that fraction of the truth windows.
#[pyfunction]
#[pyo3(signature = (records, alpha, nt_per_window, truth=None, supervised=0.0))]
fn run_sgrapp(records: Vec<(u64, u32, u32)>, alpha: f64, nt_per_window: usize, truth: Option<Vec<u64>>, supervised: f64) -> PyResult<Vec<f64>> {
    let cfg = WindowConfig::new(nt_per_window).map_err(value_err)?;
    let algorithm = if supervised > 0.0 {
        Algorithm::sgrapp_x(alpha, supervised)
    } else {
        Algorithm::Sgrapp { alpha }
    };
    let report = harness::run_stream(&to_records(records), algorithm, cfg, truth.as_deref()).map_err(value_err)?;
    Ok(report.estimates())
}

#[pyfunction]
fn mape(truths: Vec<u64>, estimates: Vec<f64>) -> PyResult<f64> {
    harness::mape(&truths, &estimates).map(|r| r.mape).map_err(value_err)
}

/// Window-by-window cumulative estimator.
#[pyclass(name = "Estimator")]
struct PyEstimator {
    inner: EstimatorState,
}

#[pymethods]
impl PyEstimator {
    #[new]
    fn new(alpha: f64) -> PyResult<Self> {
        Ok(PyEstimator {
            inner: EstimatorState::new(alpha).map_err(value_err)?,
        })
    }

    fn add_edges(&mut self, n: u64) {
        self.inner.add_edges(n);
    }

    fn step(&mut self, k: usize, window_count: u64) -> PyResult<f64> {
        self.inner.sgrapp_step(k, window_count).map_err(value_err)
    }

    #[pyo3(signature = (k, window_count, truth=None))]
    fn supervised_step(&mut self, k: usize, window_count: u64, truth: Option<u64>) -> PyResult<f64> {
        self.inner.sgrapp_x_step(k, window_count, truth).map_err(value_err)
    }

    #[getter]
    fn estimate(&self) -> f64 {
        self.inner.estimate()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }
}

/// Reservoir-sampling baseline; `variant` is 1, 2 or 3.
#[pyclass(name = "Fleet")]
struct PyFleet {
    inner: FleetState,
}

#[pymethods]
impl PyFleet {
    #[new]
    #[pyo3(signature = (variant, capacity, p=1.0, gamma=0.7, seed=0))]
    fn new(variant: u8, capacity: usize, p: f64, gamma: f64, seed: u64) -> PyResult<Self> {
        let variant = match variant {
            1 => FleetVariant::Fleet1,
            2 => FleetVariant::Fleet2,
            3 => FleetVariant::Fleet3,
            _ => return Err(PyValueError::new_err("variant must be 1, 2 or 3")),
        };
        let cfg = FleetConfig::new(variant, capacity).with_p(p).with_gamma(gamma).with_seed(seed);
        Ok(PyFleet {
            inner: FleetState::new(cfg).map_err(value_err)?,
        })
    }

    fn process(&mut self, i: u32, j: u32) {
        self.inner.process(i, j);
    }

    #[getter]
    fn estimate(&self) -> f64 {
        self.inner.estimate()
    }
}

#[pymodule]
fn bistream(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySnapshot>()?;
    m.add_class::<PyEstimator>()?;
    m.add_class::<PyFleet>()?;
    m.add_function(wrap_pyfunction!(count_butterflies, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_count, m)?)?;
    m.add_function(wrap_pyfunction!(butterfly_support, m)?)?;
    m.add_function(wrap_pyfunction!(generate_ba, m)?)?;
    m.add_function(wrap_pyfunction!(ground_truth, m)?)?;
    m.add_function(wrap_pyfunction!(run_sgrapp, m)?)?;
    m.add_function(wrap_pyfunction!(mape, m)?)?;
    Ok(())
}
