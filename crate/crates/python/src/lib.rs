//! Python bindings: Gaussian processes, acquisition functions, archives,
//! the crawler simulator and the adaptation loop.

use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use sitemap::acquisition::{self, Incumbent, ParetoFront2, Posterior};
use sitemap::adaptation::{self, AdaptationConfig, DamagedRobot, Strategy, Trial, DEFAULT_FORCE_SCALE};
use sitemap::archive::{self as arch, Genotype};
use sitemap::bench;
use sitemap::config::RunConfig;
use sitemap::gp::{self, GpModel, KernelParams};
use sitemap::sim::DamageCondition;
use sitemap::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn run_config(config: Option<&str>) -> PyResult<RunConfig> {
    config.map_or_else(|| Ok(RunConfig::default()), |p| RunConfig::load(p).map_err(py_err))
}

/// Gaussian process with a squared-exponential kernel and a constant prior mean.
#[pyclass(name = "GaussianProcess")]
struct PyGaussianProcess {
    inner: GpModel,
}

#[pymethods]
impl PyGaussianProcess {
    #[new]
    #[pyo3(signature = (dim, length_scale=0.1, signal_variance=1.0, noise_variance=0.01, prior_mean=0.0))]
    fn new(dim: usize, length_scale: f64, signal_variance: f64, noise_variance: f64, prior_mean: f64) -> PyResult<Self> {
        let kernel = KernelParams::new(length_scale, signal_variance, noise_variance).map_err(py_err)?;
        let prior: gp::PriorMean = Arc::new(move |_: &[f64]| prior_mean);
        Ok(PyGaussianProcess {
            inner: GpModel::new(kernel, dim, prior).map_err(py_err)?,
        })
    }

    fn update(&mut self, x: Vec<f64>, y: f64) -> PyResult<()> {
        self.inner.update(&x, y).map_err(py_err)
    }

    /// Posterior `(mean, variance)` at `x`.
    fn predict(&self, x: Vec<f64>) -> PyResult<(f64, f64)> {
        let p = self.inner.predict(&x).map_err(py_err)?;
        Ok((p.mean, p.variance))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
fn kernel_eval(a: Vec<f64>, b: Vec<f64>, length_scale: f64, signal_variance: f64) -> PyResult<f64> {
    let k = KernelParams::new(length_scale, signal_variance, 0.0).map_err(py_err)?;
    gp::kernel_eval(&a, &b, &k).map_err(py_err)
}

fn posterior(mean: f64, std: f64) -> PyResult<Posterior> {
    if std.is_nan() || std < 0.0 {
        return Err(PyValueError::new_err("std must be non-negative"));
    }
    Ok(Posterior::new(mean, std))
}

#[pyfunction]
fn expected_improvement(mean: f64, std: f64, incumbent: f64) -> PyResult<f64> {
    Ok(acquisition::expected_improvement(posterior(mean, std)?, incumbent))
}

#[pyfunction]
fn feasibility_probability(mean: f64, std: f64) -> PyResult<f64> {
    Ok(acquisition::feasibility_probability(posterior(mean, std)?))
}

/// `constraints` is a list of `(mean, std)`; `incumbent=None` means no feasible observation yet.
#[pyfunction]
#[pyo3(signature = (mean, std, constraints, incumbent=None))]
fn expected_constrained_improvement(mean: f64, std: f64, constraints: Vec<(f64, f64)>, incumbent: Option<f64>) -> PyResult<f64> {
    let cons = constraints
        .into_iter()
        .map(|(m, s)| posterior(m, s))
        .collect::<PyResult<Vec<_>>>()?;
    let inc = incumbent.map_or(Incumbent::NoneFeasible, Incumbent::Feasible);
    Ok(acquisition::expected_constrained_improvement(posterior(mean, std)?, &cons, inc))
}

#[pyfunction]
fn ehvi_2d(obj1: (f64, f64), obj2: (f64, f64), front: Vec<(f64, f64)>, reference: (f64, f64)) -> PyResult<f64> {
    let f = ParetoFront2::from_points(reference, front);
    Ok(acquisition::ehvi_2d(posterior(obj1.0, obj1.1)?, posterior(obj2.0, obj2.1)?, &f))
}

/// Non-dominated subset of `points` (both objectives maximized) and its hypervolume.
#[pyfunction]
fn pareto_front(points: Vec<(f64, f64)>, reference: (f64, f64)) -> (Vec<(f64, f64)>, f64) {
    let f = ParetoFront2::from_points(reference, points);
    (f.points().to_vec(), f.hypervolume())
}

#[pyfunction]
fn mann_whitney_u(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64)> {
    bench::mann_whitney_u(&a, &b).map_err(py_err)
}

/// A behavior-performance map.
/// `(descriptor, performance, safety_values, genotype)`.
type EliteTuple = (Vec<f64>, f64, Vec<f64>, Vec<f64>);

#[pyclass(name = "Archive")]
struct PyArchive {
    inner: arch::Archive,
}

#[pymethods]
impl PyArchive {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyArchive {
            inner: arch::Archive::load(path).map_err(py_err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn cells(&self) -> Vec<usize> {
        self.inner.iter().map(|(k, _)| k).collect()
    }

    /// `(descriptor, performance, safety_values, genotype)` of the elite in `cell`.
    fn elite(&self, cell: usize) -> PyResult<EliteTuple> {
        let e = self
            .inner
            .get(cell)
            .ok_or_else(|| PyValueError::new_err(format!("cell {cell} is empty")))?;
        Ok((
            e.descriptor.as_array().to_vec(),
            e.performance,
            e.safety_values.clone(),
            e.genotype.as_slice().to_vec(),
        ))
    }

    /// `(cell, performance)` of the best elite.
    fn best(&self) -> Option<(usize, f64)> {
        self.inner.best().map(|(k, e)| (k, e.performance))
    }

    #[getter]
    fn force_norm_max(&self) -> f64 {
        self.inner.meta.force_norm_max
    }

    #[getter]
    fn safety_threshold(&self) -> Option<f64> {
        self.inner.meta.safety_threshold
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.meta.seed
    }
}

/// Runs MAP-Elites on the intact crawler.
#[pyfunction]
#[pyo3(signature = (seed, budget, config=None))]
fn generate_map(py: Python<'_>, seed: u64, budget: u64, config: Option<&str>) -> PyResult<PyArchive> {
    let cfg = run_config(config)?;
    let (inner, _) = py.detach(|| cfg.generate_map(seed, budget)).map_err(py_err)?;
    Ok(PyArchive { inner })
}

/// Outcome of one simulated episode.
#[pyclass(name = "SimOutcome", get_all)]
struct PySimOutcome {
    speed: f64,
    duty: Vec<f64>,
    force_sum: f64,
    failed: bool,
}

/// Runs one genotype on the crawler, optionally damaged.
#[pyfunction]
#[pyo3(signature = (genotype, damage="none", config=None))]
fn simulate(genotype: Vec<f64>, damage: &str, config: Option<&str>) -> PyResult<PySimOutcome> {
    let sim = run_config(config)?.simulator().map_err(py_err)?;
    let damage: DamageCondition = damage.parse().map_err(py_err)?;
    let g = Genotype::new(genotype).map_err(py_err)?;
    let r = sim.measure(&g, &damage.spec()).map_err(py_err)?;
    Ok(PySimOutcome {
        speed: r.speed,
        duty: r.duty.to_vec(),
        force_sum: r.force_sum,
        failed: r.failed,
    })
}

/// One executed trial.
#[pyclass(name = "Trial", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyTrial {
    index: usize,
    cell: usize,
    performance: f64,
    constraints: Vec<f64>,
    feasible: bool,
    acquisition: f64,
}

impl From<&Trial> for PyTrial {
    fn from(t: &Trial) -> Self {
        PyTrial {
            index: t.index,
            cell: t.cell,
            performance: t.measured_performance,
            constraints: t.measured_constraints.clone(),
            feasible: t.feasible,
            acquisition: t.acquisition_value,
        }
    }
}

#[pyclass(name = "TrialLog", get_all)]
struct PyTrialLog {
    trials: Vec<PyTrial>,
    best_safe_performance: f64,
    unsafe_count: usize,
    csv: String,
}

/// Adapts on the damaged crawler with the given strategy (`ite`, `mo-ite`, `site`).
#[pyfunction]
#[pyo3(signature = (archive, damage, strategy, trials=30, stop_ratio=Some(0.9), threshold=None,
                    constraint_scale=DEFAULT_FORCE_SCALE, seed=0, damage_jitter=0.0, config=None))]
#[allow(clippy::too_many_arguments)]
fn adapt(
    py: Python<'_>,
    archive: &PyArchive,
    damage: &str,
    strategy: &str,
    trials: usize,
    stop_ratio: Option<f64>,
    threshold: Option<f64>,
    constraint_scale: f64,
    seed: u64,
    damage_jitter: f64,
    config: Option<&str>,
) -> PyResult<PyTrialLog> {
    let sim = run_config(config)?.simulator().map_err(py_err)?;
    let damage: DamageCondition = damage.parse().map_err(py_err)?;
    let strategy: Strategy = strategy.parse().map_err(py_err)?;
    let map = &archive.inner;
    let robot = DamagedRobot::new(sim, damage.spec().jittered(seed, damage_jitter));
    let constraint = bench::force_constraint(map, threshold, constraint_scale).map_err(py_err)?;
    let mut cfg = AdaptationConfig::new(strategy, vec![constraint]);
    cfg.max_trials = trials;
    cfg.stop_ratio = stop_ratio;
    let log = py.detach(|| adaptation::adapt(map, &robot, &cfg)).map_err(py_err)?;
    Ok(PyTrialLog {
        trials: log.trials.iter().map(PyTrial::from).collect(),
        best_safe_performance: log.best_safe_performance,
        unsafe_count: log.unsafe_count,
        csv: log.to_csv(),
    })
}

#[pymodule]
fn sitemap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGaussianProcess>()?;
    m.add_class::<PyArchive>()?;
    m.add_class::<PyTrial>()?;
    m.add_class::<PyTrialLog>()?;
    m.add_class::<PySimOutcome>()?;
    m.add_function(wrap_pyfunction!(kernel_eval, m)?)?;
    m.add_function(wrap_pyfunction!(expected_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility_probability, m)?)?;
    m.add_function(wrap_pyfunction!(expected_constrained_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(ehvi_2d, m)?)?;
    m.add_function(wrap_pyfunction!(pareto_front, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney_u, m)?)?;
    m.add_function(wrap_pyfunction!(generate_map, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(adapt, m)?)?;
    Ok(())
}
