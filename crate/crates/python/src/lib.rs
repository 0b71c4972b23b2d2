//! Python bindings: simulator, terrain, networks, CEM state and the
//! train/evaluate/transfer pipeline.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use erl_quadruped::cem::{self, CemState};
use erl_quadruped::env::{self as sim, Environment, Normalizers, RobotConfig, TerrainKind};
use erl_quadruped::harness::{self, Algorithm, EvalReport, RunConfig};
use erl_quadruped::net::{init_network, NetworkSpec, ParamVector};
use erl_quadruped::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Load { .. } => PyIOError::new_err(e.to_string()),
        Error::Spec(_) | Error::Input(_) | Error::Config(_) | Error::Protocol(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_terrain(kind: &str) -> PyResult<TerrainKind> {
    kind.parse().map_err(py_err)
}

#[pyclass(name = "Terrain", module = "erlquad", from_py_object)]
#[derive(Clone)]
struct PyTerrain {
    inner: sim::Terrain,
}

#[pymethods]
impl PyTerrain {
    #[new]
    #[pyo3(signature = (kind = "flat", seed = 0, amplitude = 0.03, cell_size = 0.25))]
    fn new(kind: &str, seed: u64, amplitude: f64, cell_size: f64) -> PyResult<Self> {
        let inner =
            sim::make_terrain(parse_terrain(kind)?, seed, amplitude, cell_size).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: sim::Terrain::load(&path).map_err(py_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }

    fn height(&self, x: f64, y: f64) -> f64 {
        self.inner.height(x, y)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    fn __repr__(&self) -> String {
        format!(
            "Terrain(kind='{}', seed={}, amplitude={}, cell_size={})",
            self.inner.kind, self.inner.seed, self.inner.amplitude, self.inner.cell_size
        )
    }
}

#[pyclass(name = "QuadrupedEnv", module = "erlquad")]
struct PyQuadrupedEnv {
    inner: sim::QuadrupedEnv,
}

#[pymethods]
impl PyQuadrupedEnv {
    #[new]
    #[pyo3(signature = (terrain = None, t_max = 1000))]
    fn new(terrain: Option<PyTerrain>, t_max: usize) -> PyResult<Self> {
        let terrain = match terrain {
            Some(t) => t.inner,
            None => sim::Terrain::flat(0.25),
        };
        let inner = sim::QuadrupedEnv::new(
            terrain,
            RobotConfig::default(),
            Normalizers::default(),
            t_max,
        )
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn observation_dim(&self) -> usize {
        self.inner.observation_dim()
    }

    #[getter]
    fn action_dim(&self) -> usize {
        self.inner.action_dim()
    }

    #[getter]
    fn action_bound(&self) -> f64 {
        self.inner.action_bound()
    }

    #[getter]
    fn nominal_joints(&self) -> Vec<f64> {
        self.inner.config().nominal_joints().to_vec()
    }

    #[pyo3(signature = (seed = 0))]
    fn reset(&mut self, seed: u64) -> PyResult<Vec<f64>> {
        self.inner.reset(seed).map_err(py_err)
    }

    /// Returns `(observation, reward, done, info)`; `info` holds the reward
    /// terms and the termination reason.
    fn step<'py>(
        &mut self,
        py: Python<'py>,
        action: Vec<f64>,
    ) -> PyResult<(Vec<f64>, f64, bool, Bound<'py, PyDict>)> {
        let r = self.inner.step_full(&action).map_err(py_err)?.clone();
        let info = PyDict::new(py);
        let t = r.terms;
        for (name, v) in [
            ("forward", t.forward),
            ("survival", t.survival),
            ("height", t.height),
            ("lateral", t.lateral),
            ("roll", t.roll),
            ("pitch", t.pitch),
            ("joint_motion", t.joint_motion),
        ] {
            info.set_item(name, v)?;
        }
        info.set_item("done_reason", format!("{:?}", r.done_reason).to_lowercase())?;
        Ok((r.observation, r.reward, r.done, info))
    }

    #[getter]
    fn torso_position(&self) -> Option<(f64, f64, f64)> {
        self.inner
            .state()
            .map(|s| (s.torso_position.x, s.torso_position.y, s.torso_position.z))
    }
}

#[pyclass(name = "Network", module = "erlquad", skip_from_py_object)]
#[derive(Clone)]
struct PyNetwork {
    inner: ParamVector,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    #[pyo3(signature = (obs_dim, action_dim, hidden, bound = 0.7, seed = 0))]
    fn actor(
        obs_dim: usize,
        action_dim: usize,
        hidden: Vec<usize>,
        bound: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let spec = NetworkSpec::actor(obs_dim, action_dim, &hidden, bound).map_err(py_err)?;
        Ok(Self {
            inner: init_network(&spec, seed).map_err(py_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (obs_dim, action_dim, hidden, seed = 0))]
    fn critic(obs_dim: usize, action_dim: usize, hidden: Vec<usize>, seed: u64) -> PyResult<Self> {
        let spec = NetworkSpec::critic(obs_dim, action_dim, &hidden).map_err(py_err)?;
        Ok(Self {
            inner: init_network(&spec, seed).map_err(py_err)?,
        })
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.forward(&x).map_err(py_err)
    }

    #[getter]
    fn params(&self) -> Vec<f64> {
        self.inner.flatten()
    }

    #[setter]
    fn set_params(&mut self, values: Vec<f64>) -> PyResult<()> {
        self.inner.assign(&values).map_err(py_err)
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "CemState", module = "erlquad", skip_from_py_object)]
#[derive(Clone)]
struct PyCemState {
    inner: CemState,
}

#[pymethods]
impl PyCemState {
    #[new]
    #[pyo3(signature = (mean, variance = 1.0, noise_floor = 1e-3, population_size = 10, elite_count = 5))]
    fn new(
        mean: Vec<f64>,
        variance: f64,
        noise_floor: f64,
        population_size: usize,
        elite_count: usize,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: CemState::new(mean, variance, noise_floor, population_size, elite_count)
                .map_err(py_err)?,
        })
    }

    fn sample(&self, seed: u64) -> Vec<Vec<f64>> {
        cem::sample_population(&self.inner, seed)
            .into_iter()
            .map(|i| i.params)
            .collect()
    }

    fn update(&self, samples: Vec<Vec<f64>>, fitnesses: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: cem::cem_update(&self.inner, &samples, &fitnesses).map_err(py_err)?,
        })
    }

    fn decay(&self, rate: f64, floor: f64) -> Self {
        Self {
            inner: cem::decay_noise(&self.inner, rate, floor),
        }
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.mean.clone()
    }

    #[getter]
    fn variance(&self) -> Vec<f64> {
        self.inner.variance.clone()
    }

    #[getter]
    fn noise_floor(&self) -> f64 {
        self.inner.noise_floor
    }

    #[getter]
    fn generation(&self) -> u64 {
        self.inner.generation
    }
}

#[pyfunction]
fn elite_weights(elite_count: usize) -> Vec<f64> {
    cem::elite_weights(elite_count)
}

fn stats_dict<'py>(
    py: Python<'py>,
    mean: f64,
    std: f64,
    median: f64,
    best: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", mean)?;
    d.set_item("std", std)?;
    d.set_item("median", median)?;
    d.set_item("best", best)?;
    Ok(d)
}

/// Mean, sample standard deviation, median and best of a list of returns.
#[pyfunction]
fn summarize<'py>(py: Python<'py>, returns: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let s = harness::summarize(&returns).map_err(py_err)?;
    stats_dict(py, s.mean, s.std, s.median, s.best)
}

fn report_dict<'py>(py: Python<'py>, r: &EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let d = stats_dict(py, r.mean, r.std, r.median, r.best)?;
    d.set_item("terrain", r.terrain.as_str())?;
    d.set_item("trial_returns", r.trial_returns.clone())?;
    d.set_item("diverged_trials", r.diverged_trials)?;
    Ok(d)
}

/// Trains and writes artifacts to `out`; returns the per-iteration returns.
#[pyfunction]
#[pyo3(signature = (out, algorithm = "td3", config = None, seed = None, budget = None))]
fn train(
    out: PathBuf,
    algorithm: &str,
    config: Option<PathBuf>,
    seed: Option<u64>,
    budget: Option<usize>,
) -> PyResult<Vec<f64>> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(&p).map_err(py_err)?,
        None => RunConfig::default(),
    };
    cfg.algorithm = algorithm.parse::<Algorithm>().map_err(py_err)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(b) = budget {
        cfg.budget = b;
    }
    cfg.output_dir = out.clone();
    Ok(harness::train(&cfg, &out).map_err(py_err)?.returns)
}

#[pyfunction]
#[pyo3(signature = (checkpoint, terrain = "flat", trials = harness::DEFAULT_TRIALS, seed = 0))]
fn evaluate<'py>(
    py: Python<'py>,
    checkpoint: PathBuf,
    terrain: &str,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let ckpt = harness::load_checkpoint(&checkpoint).map_err(py_err)?;
    let report =
        harness::evaluate(&ckpt, parse_terrain(terrain)?, trials, seed, None).map_err(py_err)?;
    report_dict(py, &report)
}

/// Flat and rough reports plus `degradation = flat mean - rough mean`.
#[pyfunction]
#[pyo3(signature = (checkpoint, trials = harness::DEFAULT_TRIALS, seed = 0))]
fn transfer<'py>(
    py: Python<'py>,
    checkpoint: PathBuf,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let ckpt = harness::load_checkpoint(&checkpoint).map_err(py_err)?;
    let t = harness::transfer_experiment(&ckpt, trials, seed, None).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("flat", report_dict(py, &t.flat)?)?;
    d.set_item("rough", report_dict(py, &t.rough)?)?;
    d.set_item("degradation", t.degradation)?;
    d.set_item("table", t.table())?;
    Ok(d)
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTerrain>()?;
    m.add_class::<PyQuadrupedEnv>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyCemState>()?;
    m.add_function(wrap_pyfunction!(elite_weights, m)?)?;
    m.add_function(wrap_pyfunction!(summarize, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(transfer, m)?)?;
    m.add("OBS_DIM", sim::OBS_DIM)?;
    m.add("ACTION_DIM", sim::ACTION_DIM)?;
    Ok(())
}

#[pymodule]
fn erlquad(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
