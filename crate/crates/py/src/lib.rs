//! Python bindings. Module name: `pylvreg`.

use std::collections::BTreeMap;

use lvreg::analyze::{self, ClassifierThresholds, Peak, Regime};
use lvreg::control;
use lvreg::dynamics::{self, InitialCondition, LVParams};
use lvreg::integrate::{self, IntegrationConfig, Method, StopCause, Trajectory};
use lvreg::output;
use lvreg::scenario::{self, Scenario};
use lvreg::sweep;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_method(s: &str) -> PyResult<Method> {
    s.parse().map_err(value_err)
}

fn thresholds_from(overrides: Option<BTreeMap<String, f64>>) -> PyResult<ClassifierThresholds> {
    let mut th = ClassifierThresholds::default();
    for (k, v) in overrides.unwrap_or_default() {
        th.set(&k, v).map_err(value_err)?;
    }
    Ok(th)
}

#[pyclass(name = "LVParams", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyParams(LVParams);

#[pymethods]
impl PyParams {
    #[new]
    fn new(r: f64, a: f64, b: f64, m: f64) -> PyResult<Self> {
        LVParams::new(r, a, b, m).map(Self).map_err(value_err)
    }

    #[getter]
    fn r(&self) -> f64 {
        self.0.r()
    }
    #[getter]
    fn a(&self) -> f64 {
        self.0.a()
    }
    #[getter]
    fn b(&self) -> f64 {
        self.0.b()
    }
    #[getter]
    fn m(&self) -> f64 {
        self.0.m()
    }

    /// Interior fixed point `(m/b, r/a)`.
    fn equilibrium(&self) -> PyResult<(f64, f64)> {
        dynamics::equilibrium(&self.0)
            .map(|s| (s.h, s.p))
            .map_err(value_err)
    }

    fn conserved_quantity(&self, h: f64, p: f64) -> PyResult<f64> {
        dynamics::conserved_quantity(dynamics::State { h, p }, &self.0).map_err(value_err)
    }

    /// Vector field at `(h, p)`.
    fn rhs(&self, h: f64, p: f64) -> (f64, f64) {
        let d = dynamics::rhs(dynamics::State { h, p }, &self.0);
        (d.dh, d.dp)
    }

    fn __repr__(&self) -> String {
        format!(
            "LVParams(r={:?}, a={:?}, b={:?}, m={:?})",
            self.0.r(),
            self.0.a(),
            self.0.b(),
            self.0.m()
        )
    }
}

#[pyclass(name = "InitialCondition", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyInitial(InitialCondition);

#[pymethods]
impl PyInitial {
    #[new]
    #[pyo3(signature = (h0, p0, t0 = 0.0))]
    fn new(h0: f64, p0: f64, t0: f64) -> PyResult<Self> {
        InitialCondition::new(t0, h0, p0)
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.0.t0()
    }
    #[getter]
    fn h0(&self) -> f64 {
        self.0.h0()
    }
    #[getter]
    fn p0(&self) -> f64 {
        self.0.p0()
    }

    fn __repr__(&self) -> String {
        format!(
            "InitialCondition(h0={:?}, p0={:?}, t0={:?})",
            self.0.h0(),
            self.0.p0(),
            self.0.t0()
        )
    }
}

#[pyclass(name = "IntegrationConfig", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyConfig(IntegrationConfig);

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (h, steps, method = "rk4", divergence_bound = integrate::DEFAULT_DIVERGENCE_BOUND))]
    fn new(h: f64, steps: usize, method: &str, divergence_bound: f64) -> PyResult<Self> {
        IntegrationConfig::with_bound(h, steps, parse_method(method)?, divergence_bound)
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }
    #[getter]
    fn steps(&self) -> usize {
        self.0.n_steps()
    }
    #[getter]
    fn method(&self) -> &'static str {
        self.0.method().as_str()
    }
    #[getter]
    fn divergence_bound(&self) -> f64 {
        self.0.divergence_bound()
    }

    fn __repr__(&self) -> String {
        format!(
            "IntegrationConfig(h={:?}, steps={}, method={:?})",
            self.0.h(),
            self.0.n_steps(),
            self.0.method().as_str()
        )
    }
}

#[pyclass(name = "Trajectory", frozen)]
pub struct PyTrajectory {
    traj: Trajectory,
    method: Method,
}

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn t(&self) -> Vec<f64> {
        self.traj.times().collect()
    }
    #[getter(H)]
    fn h_values(&self) -> Vec<f64> {
        self.traj.states().iter().map(|s| s.h).collect()
    }
    #[getter(P)]
    fn p_values(&self) -> Vec<f64> {
        self.traj.states().iter().map(|s| s.p).collect()
    }
    #[getter]
    fn method(&self) -> &'static str {
        self.method.as_str()
    }
    #[getter]
    fn terminated_early(&self) -> bool {
        self.traj.terminated_early()
    }

    /// `(step, cause)` of an early stop, cause being `"bound"` or `"nonfinite"`.
    #[getter]
    fn early_stop(&self) -> Option<(usize, &'static str)> {
        self.traj.early_stop().map(|e| {
            let cause = match e.cause {
                StopCause::BoundExceeded => "bound",
                StopCause::NonFinite => "nonfinite",
            };
            (e.step, cause)
        })
    }

    fn last(&self) -> (f64, f64) {
        let s = self.traj.last();
        (s.h, s.p)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        output::write_trajectory_csv(&mut buf, &self.traj).map_err(value_err)?;
        String::from_utf8(buf).map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.traj.len()
    }
}

fn peak_tuples(peaks: &[Peak]) -> Vec<(usize, f64, f64, f64)> {
    peaks
        .iter()
        .map(|p| (p.index, p.time, p.value, p.prominence))
        .collect()
}

#[pyclass(name = "RegimeReport", frozen)]
pub struct PyReport {
    report: analyze::RegimeReport,
    json: String,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn label(&self) -> &'static str {
        self.report.label.as_str()
    }
    /// R² of the final-window P fit.
    #[getter]
    fn best_r2(&self) -> Option<f64> {
        self.report.evidence.best_r_squared()
    }
    /// `(index, time, value, prominence)` per detected H peak.
    #[getter]
    fn h_peaks(&self) -> Vec<(usize, f64, f64, f64)> {
        peak_tuples(&self.report.evidence.h_peaks.peaks)
    }
    #[getter]
    fn p_peaks(&self) -> Vec<(usize, f64, f64, f64)> {
        peak_tuples(&self.report.evidence.p_peaks.peaks)
    }
    #[getter]
    fn final_quarter_max_h(&self) -> f64 {
        self.report.evidence.final_quarter_max_h
    }
    #[getter]
    fn note(&self) -> Option<String> {
        self.report.evidence.note.clone()
    }
    /// Report JSON document.
    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __repr__(&self) -> String {
        format!("RegimeReport(label={:?})", self.report.label.as_str())
    }
}

fn build_report(
    name: &str,
    traj: &Trajectory,
    method: Method,
    params: &LVParams,
    th: &ClassifierThresholds,
) -> PyResult<PyReport> {
    let report = analyze::classify(traj, params, th);
    let json = output::Report::analysis(name, method, traj, params, &report)
        .to_json()
        .map_err(value_err)?;
    Ok(PyReport { report, json })
}

#[pyclass(name = "Scenario", frozen)]
pub struct PyScenario(Scenario);

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Scenario::preset(name)
            .map(Self)
            .ok_or_else(|| value_err(format!("unknown preset `{name}`")))
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        scenario::parse_scenario(text).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn presets() -> Vec<&'static str> {
        scenario::PRESETS.to_vec()
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }
    #[getter]
    fn params(&self) -> PyParams {
        PyParams(self.0.params)
    }
    #[getter]
    fn initial(&self) -> PyInitial {
        PyInitial(self.0.ic)
    }
    #[getter]
    fn integration(&self) -> PyConfig {
        PyConfig(self.0.integration)
    }

    fn to_config_text(&self) -> String {
        self.0.to_config_text()
    }

    fn simulate(&self) -> PyTrajectory {
        let s = &self.0;
        PyTrajectory {
            traj: integrate::simulate(&s.ic, &s.params, &s.integration),
            method: s.integration.method(),
        }
    }

    fn analyze(&self) -> PyResult<PyReport> {
        let s = &self.0;
        let traj = integrate::simulate(&s.ic, &s.params, &s.integration);
        build_report(
            &s.name,
            &traj,
            s.integration.method(),
            &s.params,
            &s.thresholds,
        )
    }

    /// One dict per grid cell, row-major.
    fn sweep(&self, py: Python<'_>) -> PyResult<Vec<BTreeMap<String, Py<PyAny>>>> {
        let spec = self.0.sweep_spec();
        let result = py.detach(|| sweep::run_sweep(&spec)).map_err(value_err)?;
        result
            .records
            .iter()
            .map(|rec| {
                let mut row = BTreeMap::new();
                for (param, value) in result.params.iter().zip(&rec.coordinates) {
                    row.insert(
                        param.as_str().to_string(),
                        value.into_pyobject(py)?.into_any().unbind(),
                    );
                }
                row.insert(
                    "label".into(),
                    rec.label.as_str().into_pyobject(py)?.into_any().unbind(),
                );
                row.insert(
                    "best_r2".into(),
                    rec.best_r2.into_pyobject(py)?.into_any().unbind(),
                );
                row.insert(
                    "peak_count".into(),
                    rec.peak_count.into_pyobject(py)?.into_any().unbind(),
                );
                row.insert(
                    "diverged".into(),
                    rec.diverged
                        .into_pyobject(py)?
                        .to_owned()
                        .into_any()
                        .unbind(),
                );
                Ok(row)
            })
            .collect()
    }

    /// Metrics of the PID loop and the calibrated LV feedforward drive,
    /// keyed `pid.<metric>` / `lv.<metric>`; `None` where undefined.
    fn control_compare(&self) -> BTreeMap<String, Option<f64>> {
        let s = &self.0;
        let c = s.control.unwrap_or_default();
        let cmp = control::compare(
            &c.plant,
            &c.pid,
            &s.lv_setup(),
            &c.setpoint_profile(),
            c.dt,
            c.t_end,
            s.thresholds.final_frac,
        );
        output::Report::comparison(&s.name, s.integration.method(), &cmp).metrics
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?})", self.0.name)
    }
}

#[pyfunction]
fn simulate(ic: &PyInitial, params: &PyParams, config: &PyConfig) -> PyTrajectory {
    PyTrajectory {
        traj: integrate::simulate(&ic.0, &params.0, &config.0),
        method: config.0.method(),
    }
}

/// Regime label plus evidence. `thresholds` overrides classifier defaults
/// by name.
#[pyfunction]
#[pyo3(signature = (trajectory, params, thresholds = None, name = "custom"))]
fn classify(
    trajectory: &PyTrajectory,
    params: &PyParams,
    thresholds: Option<BTreeMap<String, f64>>,
    name: &str,
) -> PyResult<PyReport> {
    let th = thresholds_from(thresholds)?;
    build_report(name, &trajectory.traj, trajectory.method, &params.0, &th)
}

#[pyfunction]
fn conserved_drift(trajectory: &PyTrajectory, params: &PyParams) -> Option<f64> {
    analyze::conserved_drift(&trajectory.traj, &params.0)
}

/// `(order, [(h, error), ...])`.
#[pyfunction]
fn estimate_order(
    py: Python<'_>,
    method: &str,
    ic: &PyInitial,
    params: &PyParams,
    t_end: f64,
    h_list: Vec<f64>,
) -> PyResult<(f64, Vec<(f64, f64)>)> {
    let method = parse_method(method)?;
    let (ic, params) = (ic.0, params.0);
    py.detach(|| analyze::estimate_order(method, &ic, &params, t_end, &h_list))
        .map(|e| (e.order, e.errors))
        .map_err(value_err)
}

/// Rows `(t, H, P)` of a trajectory CSV document.
#[pyfunction]
fn read_trajectory_csv(text: &str) -> PyResult<Vec<(f64, f64, f64)>> {
    output::read_trajectory_csv(text.as_bytes())
        .map(|rows| rows.into_iter().map(|r| (r.t, r.h, r.p)).collect())
        .map_err(value_err)
}

#[pyfunction]
fn regimes() -> Vec<&'static str> {
    Regime::ALL.iter().map(Regime::as_str).collect()
}

#[pymodule]
pub fn pylvreg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", output::VERSION)?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyInitial>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(conserved_drift, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_order, m)?)?;
    m.add_function(wrap_pyfunction!(read_trajectory_csv, m)?)?;
    m.add_function(wrap_pyfunction!(regimes, m)?)?;
    Ok(())
}
