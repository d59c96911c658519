//! Python bindings. Structured results cross the boundary as JSON and are
//! decoded with the standard `json` module, so they arrive as plain dicts.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;

use flocktrack::data::InitialData;
use flocktrack::driver::SimConfig;
use flocktrack::riemann::LagState;
use flocktrack::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::ConfigRejected(_)
        | Error::Schema(_)
        | Error::NonPositiveDensity(_)
        | Error::NonPositiveVolume(_)
        | Error::NonPositiveInput(_)
        | Error::EmptySupport
        | Error::TimeStepTooLarge(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn json_to_py(py: Python<'_>, value: &impl serde::Serialize) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let loads = PyModule::import(py, "json")?.getattr("loads")?;
    Ok(loads.call1((text,))?.unbind())
}

fn parse_data(data: &str) -> PyResult<InitialData> {
    InitialData::from_json(data).map_err(to_py)
}

/// Returns `(eps1, eps2, (u_mid, v_mid))` for the Riemann problem between two states.
#[pyfunction]
#[pyo3(signature = (u_left, v_left, u_right, v_right, alpha = 1.0))]
fn solve_riemann(u_left: f64, v_left: f64, u_right: f64, v_right: f64, alpha: f64) -> PyResult<(f64, f64, (f64, f64))> {
    let s = flocktrack::riemann::solve_riemann(LagState::new(u_left, v_left), LagState::new(u_right, v_right), alpha)
        .map_err(to_py)?;
    Ok((s.eps1, s.eps2, (s.middle.u, s.middle.v)))
}

#[pyfunction]
fn c_of_q(q: f64) -> f64 {
    flocktrack::functionals::c_of_q(q)
}

/// `(c1, C1_plus, C1_minus)` bracketing reflected sizes at a time step.
#[pyfunction]
fn timestep_bounds(q: f64) -> (f64, f64, f64) {
    flocktrack::splitting::timestep_bounds(q)
}

/// Reflected strength from damping a lone wave of strength `x`.
#[pyfunction]
fn implicit_split(x: f64, dt: f64, mass: f64) -> PyResult<f64> {
    flocktrack::splitting::implicit_split(x, dt, mass).map_err(to_py)
}

/// Initial bulk, flocking condition and decay rate for JSON initial data.
#[pyfunction]
#[pyo3(signature = (data, alpha = 1.0))]
fn flocking_constants(py: Python<'_>, data: &str, alpha: f64) -> PyResult<Py<PyAny>> {
    let d = parse_data(data)?;
    let fc = flocktrack::functionals::flocking_constants(&d, alpha).map_err(to_py)?;
    json_to_py(py, &fc)
}

/// Runs one simulation on JSON initial data and returns
/// `{"report": ..., "samples": [...]}`. Files are written only with `out_dir`.
#[pyfunction]
#[pyo3(signature = (data, nu = 4, t_end = 10.0, alpha = 1.0, sample_dt = 0.05, xi = None,
                    prune_tol = None, check_flocking = false, event_cap = 50_000_000, out_dir = None))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    data: &str,
    nu: u32,
    t_end: f64,
    alpha: f64,
    sample_dt: f64,
    xi: Option<f64>,
    prune_tol: Option<f64>,
    check_flocking: bool,
    event_cap: u64,
    out_dir: Option<PathBuf>,
) -> PyResult<Py<PyAny>> {
    let d = parse_data(data)?;
    let cfg = SimConfig {
        nu,
        t_end,
        alpha,
        sample_dt,
        xi,
        prune_tol,
        check_flocking,
        event_cap,
        write_frames: out_dir.is_some(),
        ..SimConfig::default()
    };
    let out = py.detach(|| flocktrack::driver::run(&cfg, &d, out_dir.as_deref())).map_err(to_py)?;
    #[derive(serde::Serialize)]
    struct Payload<'a> {
        report: &'a flocktrack::driver::RunReport,
        samples: &'a [flocktrack::driver::SampleRow],
    }
    json_to_py(py, &Payload { report: &out.report, samples: &out.samples })
}

#[pymodule]
#[pyo3(name = "flocktrack")]
fn flocktrack_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve_riemann, m)?)?;
    m.add_function(wrap_pyfunction!(c_of_q, m)?)?;
    m.add_function(wrap_pyfunction!(timestep_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(implicit_split, m)?)?;
    m.add_function(wrap_pyfunction!(flocking_constants, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
