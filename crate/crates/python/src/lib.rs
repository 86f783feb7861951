//! Python bindings for `mvstab_core`.

use mvstab_core::analysis;
use mvstab_core::measure::{self, EmpiricalMeasure};
use mvstab_core::model::{linear_model, LinearMeanFieldParams};
use mvstab_core::sim::{self, SimConfig};
use mvstab_core::stability::{self, ConditionConstants, Criterion};
use mvstab_core::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Diverged { .. } | Error::Io(_) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

/// Coefficients of `dx = (a x + b E x − k1 x(σ) − k2 E x(σ)) dt + gdiag x dB`.
#[pyclass(name = "LinearParams", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyLinearParams {
    inner: LinearMeanFieldParams,
}

#[pymethods]
impl PyLinearParams {
    #[new]
    #[pyo3(signature = (a=2.0, b=1.0, gdiag=1.0, k1=8.0, k2=3.0))]
    fn new(a: f64, b: f64, gdiag: f64, k1: f64, k2: f64) -> PyResult<Self> {
        let inner = LinearMeanFieldParams::new(a, b, gdiag, k1, k2);
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    /// The feedback-free variant.
    fn without_control(&self) -> Self {
        Self {
            inner: self.inner.without_control(),
        }
    }

    /// `(L1, L2, L3)`.
    fn lipschitz(&self) -> (f64, f64, f64) {
        let l = mvstab_core::model::linear_lipschitz_constants(&self.inner);
        (l.l1, l.l2, l.l3)
    }

    fn __repr__(&self) -> String {
        let p = self.inner;
        format!(
            "LinearParams(a={}, b={}, gdiag={}, k1={}, k2={})",
            p.a, p.b, p.gdiag, p.k1, p.k2
        )
    }
}

/// Recorded moment series of one particle-system run.
#[pyclass(name = "Trajectory", frozen, get_all)]
struct PyTrajectory {
    times: Vec<f64>,
    m1: Vec<f64>,
    msq: Vec<f64>,
    msq_stderr: Vec<f64>,
    m_p: Vec<f64>,
    hold_err_p: Vec<f64>,
}

#[pyfunction]
#[pyo3(signature = (params, n, dt, delta, t_end, seed, x0=1.0, record_stride=1, moment_order=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    params: PyLinearParams,
    n: usize,
    dt: f64,
    delta: f64,
    t_end: f64,
    seed: u64,
    x0: f64,
    record_stride: usize,
    moment_order: Option<u32>,
) -> PyResult<PyTrajectory> {
    let mut config =
        SimConfig::new(n, dt, delta, t_end, seed, vec![x0]).with_record_stride(record_stride);
    config.moment_order = moment_order;
    let model = linear_model(params.inner);
    let rec = py
        .detach(|| sim::run_particle_system(&model, &config))
        .map_err(to_py)?;
    Ok(PyTrajectory {
        m1: rec.m1.iter().map(|m| m[0]).collect(),
        times: rec.times,
        msq: rec.msq,
        msq_stderr: rec.msq_stderr,
        m_p: rec.m_p,
        hold_err_p: rec.hold_err_p,
    })
}

/// Exact `(times, m1, m2)` of the linear model under held control.
#[pyfunction]
#[pyo3(signature = (params, delta, t_end, grid_dt, x0=1.0))]
fn moment_oracle(
    params: PyLinearParams,
    delta: f64,
    t_end: f64,
    grid_dt: f64,
    x0: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let path =
        analysis::moment_ode_oracle(&params.inner, x0, delta, t_end, grid_dt).map_err(to_py)?;
    Ok((path.times, path.m1, path.m2))
}

/// Decay rate of `E|x|²` over `window` from a sampled series.
#[pyfunction]
fn decay_rate(times: Vec<f64>, values: Vec<f64>, window: (f64, f64)) -> PyResult<f64> {
    struct Series(Vec<f64>, Vec<f64>);
    impl analysis::MeanSquareSeries for Series {
        fn times(&self) -> &[f64] {
            &self.0
        }
        fn mean_square(&self) -> &[f64] {
            &self.1
        }
    }
    if times.len() != values.len() {
        return Err(PyValueError::new_err("times and values differ in length"));
    }
    analysis::estimate_decay_rate(&Series(times, values), window)
        .map(|r| r.rate)
        .map_err(to_py)
}

/// Stability-condition constants.
#[pyclass(name = "Constants", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyConstants {
    inner: ConditionConstants,
}

#[pymethods]
impl PyConstants {
    #[new]
    #[pyo3(signature = (l1=8.0, l2=1.0, l3=128.0, lambda1=0.5, lambda2=0.5, decay_coeff=3.5, gamma2=0.0, c1=1.0, c2=2.0, p=2))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        l1: f64,
        l2: f64,
        l3: f64,
        lambda1: f64,
        lambda2: f64,
        decay_coeff: f64,
        gamma2: f64,
        c1: f64,
        c2: f64,
        p: u32,
    ) -> PyResult<Self> {
        ConditionConstants::from_decay_coeff(
            l1,
            l2,
            l3,
            lambda1,
            lambda2,
            decay_coeff,
            gamma2,
            c1,
            c2,
            p as f64,
        )
        .map(|inner| Self { inner })
        .map_err(to_py)
    }

    /// Largest admissible gap for "hinf", "asymptotic" or "moment".
    fn max_delta(&self, criterion: &str) -> PyResult<f64> {
        let c = match criterion {
            "hinf" => Criterion::Hinf,
            "asymptotic" => Criterion::Asymptotic,
            "moment" => Criterion::Moment(self.inner.p),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown criterion {other:?}"
                )))
            }
        };
        stability::max_delta(&self.inner, c).map_err(to_py)
    }

    /// Certificate at gap `delta`.
    fn certify(&self, delta: f64) -> PyResult<PyReport> {
        let r = stability::certify(&self.inner, delta).map_err(to_py)?;
        Ok(PyReport {
            delta: r.delta,
            theta: r.theta,
            lambda4: r.lambda4,
            h_delta: r.h_delta,
            h_delta_p: r.h_delta_p,
            k: r.k,
            alpha_max: r.alpha_max,
            feasible_hinf: r.feasible.hinf,
            feasible_asymptotic: r.feasible.asymptotic,
            feasible_moment: r.feasible.moment,
            feasible_exponential: r.feasible.exponential,
        })
    }
}

#[pyclass(name = "StabilityReport", frozen, get_all)]
struct PyReport {
    delta: f64,
    theta: Option<f64>,
    lambda4: Option<f64>,
    h_delta: f64,
    h_delta_p: f64,
    k: Option<f64>,
    alpha_max: Option<f64>,
    feasible_hinf: bool,
    feasible_asymptotic: bool,
    feasible_moment: bool,
    feasible_exponential: bool,
}

fn scalars(xs: Vec<f64>) -> PyResult<EmpiricalMeasure> {
    EmpiricalMeasure::from_scalars(&xs).map_err(to_py)
}

/// W₂ between two equal-size 1-d samples via sorted order statistics.
#[pyfunction]
fn wasserstein2_1d(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    measure::wasserstein2_1d(&scalars(a)?, &scalars(b)?).map_err(to_py)
}

/// W₂ between two equal-size 1-d samples via exact assignment.
#[pyfunction]
fn wasserstein2_exact(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    measure::wasserstein2_exact(&scalars(a)?, &scalars(b)?).map_err(to_py)
}

/// Mean-field error scaling: `(sizes, mean_errors, slope)`.
#[pyfunction]
#[pyo3(signature = (params, sizes, replications, dt=1e-3, delta=0.01, t_end=1.0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn chaos_scaling(
    py: Python<'_>,
    params: PyLinearParams,
    sizes: Vec<usize>,
    replications: usize,
    dt: f64,
    delta: f64,
    t_end: f64,
    seed: u64,
) -> PyResult<(Vec<usize>, Vec<f64>, Option<f64>)> {
    let base = SimConfig::new(1, dt, delta, t_end, seed, vec![1.0]);
    let r = py
        .detach(|| analysis::chaos_scaling(&params.inner, &base, &sizes, replications))
        .map_err(to_py)?;
    Ok((r.sizes, r.mean_errors, r.slope))
}

#[pymodule]
fn mvstab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyLinearParams>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyConstants>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(moment_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(decay_rate, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein2_1d, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein2_exact, m)?)?;
    m.add_function(wrap_pyfunction!(chaos_scaling, m)?)?;
    Ok(())
}
