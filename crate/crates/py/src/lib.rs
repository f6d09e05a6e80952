//! Python bindings: instances, solves, baselines, the oracle and the
//! semantic similarity curve.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use semrelay_core::config::RunConfig;
use semrelay_core::netmodel::{self, Allocation as CoreAllocation, NetworkInstance as CoreInstance, SemanticParams};
use semrelay_core::scenarios::{self, BaselineMode, MixMode, ScenarioSpec};
use semrelay_core::solver::{SolveReport as CoreReport, SolverConfig};
use semrelay_core::{oracle, semcom, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::Parse(_) | Error::Domain(_) | Error::Dimension(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "NetworkInstance", module = "semrelay", from_py_object)]
#[derive(Clone)]
struct NetworkInstance {
    inner: CoreInstance,
}

#[pymethods]
impl NetworkInstance {
    /// Builds the instance described by a TOML run configuration.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let cfg = RunConfig::from_toml(text).map_err(py_err)?;
        Ok(Self { inner: cfg.instance().map_err(py_err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: CoreInstance = serde_json::from_str(text).map_err(json_err)?;
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Seeded instance with default budgets and constants.
    #[staticmethod]
    #[pyo3(signature = (clusters=5, n_sem=4, n_con=4, seed=1, mix="uniform", users_per_cluster=8))]
    fn generate(
        clusters: usize,
        n_sem: usize,
        n_con: usize,
        seed: u64,
        mix: &str,
        users_per_cluster: usize,
    ) -> PyResult<Self> {
        let mix: MixMode = serde_json::from_value(serde_json::Value::String(mix.to_string()))
            .map_err(|_| PyValueError::new_err(format!("unknown mix `{mix}`")))?;
        let spec = ScenarioSpec { clusters, n_sem, n_con, seed, mix, users_per_cluster, ..Default::default() };
        Ok(Self { inner: scenarios::generate(&spec).map_err(py_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    #[getter]
    fn num_clusters(&self) -> usize {
        self.inner.clusters.len()
    }

    #[getter]
    fn num_users(&self) -> usize {
        self.inner.num_users()
    }

    /// Sets one budget: `sat_bandwidth`, `sat_power`, `uav_bandwidth` or `uav_power`.
    fn set_budget(&mut self, name: &str, value: f64) -> PyResult<()> {
        let b = &mut self.inner.budgets;
        match name {
            "sat_bandwidth" => b.sat_bandwidth = value,
            "sat_power" => b.sat_power = value,
            "uav_bandwidth" => b.uav_bandwidth = value,
            "uav_power" => b.uav_power = value,
            _ => return Err(PyValueError::new_err(format!("unknown budget `{name}`"))),
        }
        self.inner.validate().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("NetworkInstance(clusters={}, users={})", self.inner.clusters.len(), self.inner.num_users())
    }
}

/// `(b_s2r, p_s2r, (x, y), [(bandwidth, power), ...])`
type ClusterTuple = (f64, f64, (f64, f64), Vec<(f64, f64)>);

#[pyclass(name = "SolveReport", module = "semrelay", skip_from_py_object)]
struct SolveReport {
    inner: CoreReport,
}

#[pymethods]
impl SolveReport {
    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn feasible(&self) -> bool {
        self.inner.feasible
    }

    #[getter]
    fn max_residual(&self) -> f64 {
        self.inner.max_residual
    }

    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.inner.objective_trace.clone()
    }

    /// Block KKT residuals as `(bandwidth, auxiliary, power)`.
    #[getter]
    fn kkt(&self) -> (f64, f64, f64) {
        let k = &self.inner.kkt;
        (k.bandwidth, k.auxiliary, k.power)
    }

    /// Per cluster: `(b_s2r, p_s2r, (x, y), [(bandwidth, power), ...])`.
    #[getter]
    fn allocation(&self) -> Vec<ClusterTuple> {
        allocation_tuples(&self.inner.allocation)
    }

    fn allocation_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.allocation).map_err(json_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveReport(objective={:?}, iterations={}, converged={})",
            self.inner.objective, self.inner.iterations, self.inner.converged
        )
    }
}

fn allocation_tuples(a: &CoreAllocation) -> Vec<ClusterTuple> {
    a.clusters
        .iter()
        .map(|c| {
            let links = c.links.iter().map(|l| (l.bandwidth, l.power)).collect();
            (c.b_s2r, c.p_s2r, (c.uav_xy[0], c.uav_xy[1]), links)
        })
        .collect()
}

fn solver_config(outer_max_iters: Option<usize>, outer_rel_tol: Option<f64>, seed: Option<u64>) -> PyResult<SolverConfig> {
    let mut cfg = SolverConfig::default();
    if let Some(v) = outer_max_iters {
        cfg.outer_max_iters = v;
    }
    if let Some(v) = outer_rel_tol {
        cfg.outer_rel_tol = v;
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

/// Alternating optimisation; `mode` is joint, fixed-b, fixed-p or fixed-l.
#[pyfunction]
#[pyo3(signature = (instance, mode="joint", outer_max_iters=None, outer_rel_tol=None, seed=None))]
fn solve(
    py: Python<'_>,
    instance: &NetworkInstance,
    mode: &str,
    outer_max_iters: Option<usize>,
    outer_rel_tol: Option<f64>,
    seed: Option<u64>,
) -> PyResult<SolveReport> {
    let mode: BaselineMode = mode.parse().map_err(py_err)?;
    let cfg = solver_config(outer_max_iters, outer_rel_tol, seed)?;
    let inst = instance.inner.clone();
    let inner = py.detach(move || scenarios::run_baseline(&inst, mode, &cfg)).map_err(py_err)?;
    Ok(SolveReport { inner })
}

/// Brute-force optimum on tiny instances: `(objective, allocation_json)`.
#[pyfunction]
fn oracle_search(py: Python<'_>, instance: &NetworkInstance) -> PyResult<(f64, String)> {
    let inst = instance.inner.clone();
    let r = py.detach(move || oracle::grid_search(&inst, &oracle::GridSpec::default())).map_err(py_err)?;
    Ok((r.objective, serde_json::to_string(&r.allocation).map_err(json_err)?))
}

/// Original-constraint check of a JSON allocation: `(feasible, violated)`.
#[pyfunction]
fn feasible(instance: &NetworkInstance, allocation_json: &str) -> PyResult<(bool, Vec<String>)> {
    let a: CoreAllocation = serde_json::from_str(allocation_json).map_err(json_err)?;
    let f = oracle::feasible(&instance.inner, &a).map_err(py_err)?;
    Ok((f.feasible, f.violated))
}

#[pyfunction]
fn sum_rate(instance: &NetworkInstance, allocation_json: &str) -> PyResult<f64> {
    let a: CoreAllocation = serde_json::from_str(allocation_json).map_err(json_err)?;
    a.check_shape(&instance.inner).map_err(py_err)?;
    Ok(netmodel::sum_rate(&instance.inner, &a))
}

/// Semantic similarity at SNR `r_db` with default curve constants.
#[pyfunction]
fn similarity(r_db: f64) -> f64 {
    semcom::similarity(r_db, &SemanticParams::default())
}

#[pyfunction]
fn similarity_inverse(eps: f64) -> PyResult<f64> {
    semcom::similarity_inverse(eps, &SemanticParams::default()).map_err(py_err)
}

#[pymodule]
fn semrelay(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<NetworkInstance>()?;
    m.add_class::<SolveReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_search, m)?)?;
    m.add_function(wrap_pyfunction!(feasible, m)?)?;
    m.add_function(wrap_pyfunction!(sum_rate, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(similarity_inverse, m)?)?;
    Ok(())
}
