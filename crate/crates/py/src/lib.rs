//! Python bindings: trajectories, the drag simulator, sparse fits, noise
//! estimation and the cross-drop benchmark.

// Triggered by the code pyo3 0.22 generates for `PyResult` returns.
#![allow(clippy::useless_conversion)]

use dropfit::benchmark::{run_benchmark, BenchmarkConfig, TemplateId};
use dropfit::diffsmooth::{
    build_noise_calibration, default_noise_grid, estimate_noise_level, SmootherConfig,
};
use dropfit::simulate::{reference_balls, simulate_drop, terminal_velocity, SyntheticSet};
use dropfit::sindy::{fit_second_order, group_fit_second_order, StateVariables};
use dropfit::trajectory::add_gaussian_noise;
use dropfit::{DragModel, FitConfig, FluidSpec, PipelineConfig, Salience, SparseModel, Trajectory};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: dropfit::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Trajectory", module = "dropfit")]
#[derive(Clone)]
pub struct PyTrajectory {
    inner: Trajectory,
}

#[pymethods]
impl PyTrajectory {
    #[new]
    fn new(ball_id: &str, drop_id: u32, times: Vec<f64>, heights: Vec<f64>) -> PyResult<Self> {
        let inner = Trajectory::new(ball_id, drop_id, times, heights).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn ball_id(&self) -> &str {
        self.inner.ball_id()
    }

    #[getter]
    fn drop_id(&self) -> u32 {
        self.inner.drop_id()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    #[getter]
    fn heights(&self) -> Vec<f64> {
        self.inner.heights().to_vec()
    }

    /// Copy with i.i.d. Gaussian noise of standard deviation `eta` metres.
    #[pyo3(signature = (eta, seed=0))]
    fn with_noise(&self, eta: f64, seed: u64) -> PyResult<Self> {
        let inner = add_gaussian_noise(&self.inner, eta, seed).map_err(err)?;
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(ball_id={:?}, drop_id={}, samples={})",
            self.inner.ball_id(),
            self.inner.drop_id(),
            self.inner.len()
        )
    }
}

#[pyclass(name = "SparseModel", module = "dropfit")]
#[derive(Clone)]
pub struct PySparseModel {
    inner: SparseModel,
}

#[pymethods]
impl PySparseModel {
    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coefficients().to_vec()
    }

    #[getter]
    fn term_names(&self) -> Vec<String> {
        self.inner.terms().iter().map(|t| t.name.clone()).collect()
    }

    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.support()
    }

    #[getter]
    fn term_count(&self) -> usize {
        self.inner.term_count()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner
            .warnings()
            .iter()
            .map(|w| w.to_string())
            .collect()
    }

    /// Coefficient of the term printed as `name`, e.g. `"v^2"`; zero when absent.
    fn coefficient(&self, name: &str) -> f64 {
        self.inner.coefficient_named(name)
    }

    /// Right-hand side evaluated at `state`, ordered as the model's states.
    fn predict(&self, state: Vec<f64>) -> PyResult<f64> {
        if state.len() != self.inner.n_states() {
            return Err(PyValueError::new_err(format!(
                "expected {} state values, got {}",
                self.inner.n_states(),
                state.len()
            )));
        }
        Ok(self.inner.predict_derivative(&state))
    }

    #[pyo3(signature = (precision=4))]
    fn equation(&self, precision: usize) -> String {
        self.inner.equation(precision)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("SparseModel({:?})", self.inner.equation(4))
    }
}

fn salience(name: &str) -> PyResult<Salience> {
    Ok(match name {
        "l1" => Salience::L1,
        "l2" => Salience::L2,
        "mean-abs" => Salience::MeanAbs,
        "median-abs" => Salience::MedianAbs,
        "quantile25" => Salience::Quantile25,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown salience {other:?}; expected l1, l2, mean-abs, median-abs or quantile25"
            )))
        }
    })
}

fn pipeline(window: usize, degree: u32, smooth: bool, states: &str) -> PyResult<PipelineConfig> {
    let states = match states {
        "xv" => StateVariables::HeightVelocity,
        "v" => StateVariables::Velocity,
        other => {
            return Err(PyValueError::new_err(format!(
                "states must be \"xv\" or \"v\", got {other:?}"
            )))
        }
    };
    Ok(PipelineConfig {
        smoother: SmootherConfig::with_window(window).map_err(err)?,
        smooth,
        degree,
        states,
    })
}

fn fit_config(threshold: f64, salience_name: &str) -> PyResult<FitConfig> {
    let cfg = FitConfig {
        salience: salience(salience_name)?,
        ..FitConfig::with_threshold(threshold)
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

fn unwrap_all(trajs: Vec<PyTrajectory>) -> Vec<Trajectory> {
    trajs.into_iter().map(|t| t.inner).collect()
}

fn drag_model(model: &str, g: f64, drag: f64, quad: f64, ball: &str) -> PyResult<DragModel> {
    Ok(match model {
        "constant" => DragModel::ConstantAcceleration { g },
        "linear" => DragModel::LinearDrag {
            g,
            coefficient: drag,
        },
        "quadratic" => DragModel::QuadraticDrag { g, lin: drag, quad },
        "reynolds" => DragModel::ReynoldsDependent {
            ball: reference_balls()
                .into_iter()
                .find(|b| b.label == ball)
                .ok_or_else(|| PyValueError::new_err(format!("unknown ball {ball:?}")))?,
            fluid: FluidSpec::AIR,
            g,
        },
        other => return Err(PyValueError::new_err(format!("unknown model {other:?}"))),
    })
}

/// Simulates one drop. Returns `(trajectory, velocities)`.
#[pyfunction]
#[pyo3(signature = (model="linear", g=-9.8, drag=-0.5, quad=-0.02, ball="tennis", x0=35.0, v0=0.0, dt=1.0/15.0, steps=49))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    model: &str,
    g: f64,
    drag: f64,
    quad: f64,
    ball: &str,
    x0: f64,
    v0: f64,
    dt: f64,
    steps: usize,
) -> PyResult<(PyTrajectory, Vec<f64>)> {
    let m = drag_model(model, g, drag, quad, ball)?;
    let sim = simulate_drop(&m, x0, v0, dt, steps).map_err(err)?;
    Ok((
        PyTrajectory {
            inner: sim.trajectory,
        },
        sim.velocities,
    ))
}

/// Terminal velocity of a drag model, in m/s.
#[pyfunction]
#[pyo3(signature = (model="linear", g=-9.8, drag=-0.5, quad=-0.02, ball="tennis"))]
fn terminal(model: &str, g: f64, drag: f64, quad: f64, ball: &str) -> PyResult<f64> {
    terminal_velocity(&drag_model(model, g, drag, quad, ball)?).map_err(err)
}

/// Five linear-drag balls with two noisy drops each.
#[pyfunction]
#[pyo3(signature = (eta=0.0, seed=0, n_samples=60))]
fn synthetic_set(eta: f64, seed: u64, n_samples: usize) -> PyResult<Vec<PyTrajectory>> {
    let set = SyntheticSet {
        eta,
        seed,
        n_samples,
        ..SyntheticSet::default()
    };
    let trajs = set.generate().map_err(err)?;
    Ok(trajs
        .into_iter()
        .map(|inner| PyTrajectory { inner })
        .collect())
}

#[pyfunction]
fn load_trajectories(path: &str) -> PyResult<Vec<PyTrajectory>> {
    let trajs = dropfit::io::load_trajectories(path).map_err(err)?;
    Ok(trajs
        .into_iter()
        .map(|inner| PyTrajectory { inner })
        .collect())
}

/// Sparse model of the acceleration of one drop.
#[pyfunction]
#[pyo3(signature = (trajectory, threshold=0.1, window=35, degree=3, smooth=true, states="xv"))]
fn fit(
    trajectory: PyRef<'_, PyTrajectory>,
    threshold: f64,
    window: usize,
    degree: u32,
    smooth: bool,
    states: &str,
) -> PyResult<PySparseModel> {
    let p = pipeline(window, degree, smooth, states)?;
    let inner =
        fit_second_order(&trajectory.inner, &p, &fit_config(threshold, "l1")?).map_err(err)?;
    Ok(PySparseModel { inner })
}

/// Models for many drops sharing one support. Returns `(models, support)`.
#[pyfunction]
#[pyo3(signature = (trajectories, threshold=0.1, salience="l1", window=35, degree=3, smooth=true, states="xv"))]
fn group_fit(
    trajectories: Vec<PyTrajectory>,
    threshold: f64,
    salience: &str,
    window: usize,
    degree: u32,
    smooth: bool,
    states: &str,
) -> PyResult<(Vec<PySparseModel>, Vec<usize>)> {
    let p = pipeline(window, degree, smooth, states)?;
    let r = group_fit_second_order(
        &unwrap_all(trajectories),
        &p,
        &fit_config(threshold, salience)?,
    )
    .map_err(err)?;
    let models = r
        .models
        .into_iter()
        .map(|inner| PySparseModel { inner })
        .collect();
    Ok((models, r.shared_support))
}

/// Noise level of each trajectory, in metres, from a fresh calibration.
#[pyfunction]
#[pyo3(signature = (trajectories, window=35, replicates=20, seed=0))]
fn estimate_noise(
    trajectories: Vec<PyTrajectory>,
    window: usize,
    replicates: usize,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let smoother = SmootherConfig::with_window(window).map_err(err)?;
    let cal =
        build_noise_calibration(&default_noise_grid(), replicates, seed, smoother).map_err(err)?;
    trajectories
        .iter()
        .map(|t| {
            Ok(estimate_noise_level(&t.inner, smoother, &cal)
                .map_err(err)?
                .eta)
        })
        .collect()
}

/// Median forecast error per model template, keyed by template name.
#[pyfunction]
#[pyo3(signature = (trajectories, window=35))]
fn benchmark<'py>(
    py: Python<'py>,
    trajectories: Vec<PyTrajectory>,
    window: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = BenchmarkConfig {
        pipeline: pipeline(window, 3, true, "xv")?,
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(&unwrap_all(trajectories), &cfg).map_err(err)?;
    let out = PyDict::new_bound(py);
    for t in TemplateId::ALL {
        out.set_item(t.to_string(), report.median_error(t))?;
    }
    Ok(out)
}

#[pymodule]
#[pyo3(name = "dropfit")]
pub fn dropfit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PySparseModel>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(terminal, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_set, m)?)?;
    m.add_function(wrap_pyfunction!(load_trajectories, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(group_fit, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_noise, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark, m)?)?;
    Ok(())
}
