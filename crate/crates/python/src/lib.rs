//! Python bindings: closed forms, samplers, estimators and the experiment
//! runner. Paths cross the boundary as `SamplePath` objects or plain lists.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use alpha_bridge::{estimators, experiments, model, path_stats, samplers, BridgeError};

fn to_py(err: BridgeError) -> PyErr {
    match err {
        BridgeError::Io { .. } => PyOSError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn method(name: &str) -> PyResult<samplers::SamplerKind> {
    match name {
        "exact" => Ok(samplers::SamplerKind::Exact),
        "joint" => Ok(samplers::SamplerKind::Joint),
        "euler" => Ok(samplers::SamplerKind::Euler),
        other => Err(PyValueError::new_err(format!(
            "unknown method {other:?}; expected exact, joint or euler"
        ))),
    }
}

/// Model triple `(alpha, sigma, T)`.
#[pyclass(name = "BridgeParams", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyBridgeParams(model::BridgeParams);

#[pymethods]
impl PyBridgeParams {
    #[new]
    #[pyo3(signature = (alpha, horizon, sigma = 1.0))]
    fn new(alpha: f64, horizon: f64, sigma: f64) -> PyResult<Self> {
        model::BridgeParams::new(alpha, sigma, horizon).map(Self).map_err(to_py)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon
    }

    /// Conditional `(mean, variance)` of `X_t` given `X_s = x_s`.
    fn transition_moments(&self, s: f64, t: f64, x_s: f64) -> PyResult<(f64, f64)> {
        model::transition_moments(&self.0, s, t, x_s).map_err(to_py)
    }

    /// Draw one path on `times` (must start at 0).
    #[pyo3(signature = (times, seed = 0, replicate = 0, method = "exact"))]
    fn sample(&self, times: Vec<f64>, seed: u64, replicate: u64, method: &str) -> PyResult<PySamplePath> {
        let grid = model::TimeGrid::new(times).map_err(to_py)?;
        let kind = self::method(method)?;
        samplers::sample(kind, &self.0, &grid, samplers::SeedSpec::new(seed, replicate))
            .map(PySamplePath)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "BridgeParams(alpha={}, horizon={}, sigma={})",
            self.0.alpha, self.0.horizon, self.0.sigma
        )
    }
}

/// One observed trajectory on a grid inside `[0, T)`.
#[pyclass(name = "SamplePath", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySamplePath(model::SamplePath);

#[pymethods]
impl PySamplePath {
    #[new]
    fn new(times: Vec<f64>, values: Vec<f64>, horizon: f64) -> PyResult<Self> {
        let grid = model::TimeGrid::new(times).map_err(to_py)?;
        model::SamplePath::new(grid, values, horizon).map(Self).map_err(to_py)
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn energy(&self, t: f64) -> PyResult<f64> {
        estimators::energy_integral(&self.0, t).map_err(to_py)
    }

    fn mle_alpha(&self, t: f64) -> PyResult<f64> {
        estimators::mle_alpha(&self.0, t).map_err(to_py)
    }

    fn log_likelihood_ratio(&self, alpha: f64, t: f64) -> PyResult<f64> {
        estimators::log_likelihood_ratio(&self.0, alpha, t).map_err(to_py)
    }

    fn qv_sigma2(&self) -> PyResult<f64> {
        estimators::qv_sigma2(&self.0).map_err(to_py)
    }

    fn classify(&self, t: f64, candidates: Vec<f64>) -> PyResult<f64> {
        estimators::classify_alpha(&self.0, t, &candidates).map_err(to_py)
    }

    /// Full estimate report as a dict; `t` defaults to the last grid point.
    #[pyo3(signature = (t = None))]
    fn estimate<'py>(&self, py: Python<'py>, t: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let r = estimators::estimate(&self.0, t).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("alpha_hat", r.alpha_hat)?;
        d.set_item("sigma2_hat", r.sigma2_hat)?;
        d.set_item("energy", r.energy)?;
        d.set_item("stoch_integral", r.stoch_integral)?;
        d.set_item("horizon_t", r.horizon_t)?;
        d.set_item("n_points", r.n_points)?;
        Ok(d)
    }

    fn rescaled_terminal(&self, alpha: f64) -> f64 {
        path_stats::rescaled_terminal(&self.0, alpha)
    }

    /// Path as the CSV text written by the command-line tool.
    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        alpha_bridge::pathio::write_path(&self.0, &mut buf).map_err(|e| PyOSError::new_err(e.to_string()))?;
        Ok(String::from_utf8(buf).expect("csv is ascii"))
    }
}

#[pyfunction]
fn covariance(alpha: f64, beta: f64, s: f64, t: f64, horizon: f64) -> PyResult<f64> {
    model::covariance(alpha, beta, s, t, horizon).map_err(to_py)
}

#[pyfunction]
fn variance(alpha: f64, t: f64, horizon: f64) -> PyResult<f64> {
    model::variance(alpha, t, horizon).map_err(to_py)
}

#[pyfunction]
fn rescaled_qv(alpha: f64, t: f64, horizon: f64) -> PyResult<f64> {
    model::rescaled_qv(alpha, t, horizon).map_err(to_py)
}

#[pyfunction]
fn lil_envelope(alpha: f64, t: f64, horizon: f64) -> PyResult<f64> {
    model::lil_envelope(alpha, t, horizon).map_err(to_py)
}

#[pyfunction]
fn limit_variance(alpha: f64, horizon: f64) -> PyResult<f64> {
    model::limit_variance(alpha, horizon).map_err(to_py)
}

#[pyfunction]
fn uniform_grid(t_end: f64, steps: usize) -> PyResult<Vec<f64>> {
    Ok(model::TimeGrid::uniform(t_end, steps).map_err(to_py)?.points().to_vec())
}

#[pyfunction]
fn geometric_grid(horizon: f64, ratio: f64, t_end: f64) -> PyResult<Vec<f64>> {
    Ok(model::TimeGrid::geometric(horizon, ratio, t_end)
        .map_err(to_py)?
        .points()
        .to_vec())
}

#[pyfunction]
fn sign_split(values: Vec<f64>, threshold: f64) -> PyResult<(f64, f64, f64)> {
    path_stats::sign_split(&values, threshold).map_err(to_py)
}

/// Runs an experiment spec given as JSON text; returns the canonical
/// summary JSON. The GIL is released while replicates run.
#[pyfunction]
fn run_experiment(py: Python<'_>, spec_json: &str) -> PyResult<String> {
    let spec = experiments::ExperimentSpec::from_json(spec_json).map_err(to_py)?;
    py.detach(|| experiments::run_experiment(&spec).and_then(|s| s.to_canonical_json()))
        .map_err(to_py)
}

#[pymodule]
#[pyo3(name = "alpha_bridge")]
fn py_alpha_bridge(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBridgeParams>()?;
    m.add_class::<PySamplePath>()?;
    m.add_function(wrap_pyfunction!(covariance, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(rescaled_qv, m)?)?;
    m.add_function(wrap_pyfunction!(lil_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(limit_variance, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_grid, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_grid, m)?)?;
    m.add_function(wrap_pyfunction!(sign_split, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
