//! Python bindings. Results cross the boundary as JSON text.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use recbid::data::DataSet;
use recbid::sim::{compare_cases, emit_day, load_config, run_day, run_week, Case, RunSpec};
use recbid::solver::{Backend, SolveRequest, DEFAULT_BINARY_LIMIT};
use recbid::synthetic::{synthetic_dataset, SyntheticSpec};
use recbid::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::InvalidConfig(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn run_spec(
    data_dir: PathBuf,
    out_dir: PathBuf,
    config: Option<PathBuf>,
    case: &str,
    nm: usize,
    nr: usize,
    seed: u64,
    backend: &str,
    time_limit: f64,
    gap: f64,
) -> PyResult<RunSpec> {
    let config = load_config(config.as_deref()).map_err(py_err)?;
    let data = DataSet::load_dir(&data_dir, config.horizon_hours).map_err(py_err)?;
    let mut spec = RunSpec::new(config, data, out_dir);
    spec.case = case.parse::<Case>().map_err(py_err)?;
    spec.n_prices = nm;
    spec.n_energies = nr;
    spec.seed = seed;
    spec.solve = SolveRequest {
        backend: backend.parse::<Backend>().map_err(py_err)?,
        time_limit_s: time_limit,
        rel_gap: gap,
        binary_limit: DEFAULT_BINARY_LIMIT,
    };
    spec.validate().map_err(py_err)?;
    Ok(spec)
}

/// Writes a seeded synthetic data directory.
#[pyfunction]
#[pyo3(signature = (out_dir, seed=2022, history_days=35, days=7))]
fn synth(out_dir: PathBuf, seed: u64, history_days: usize, days: usize) -> PyResult<()> {
    let spec = SyntheticSpec {
        seed,
        history_days,
        week_days: days,
        ..SyntheticSpec::default()
    };
    synthetic_dataset(&spec).and_then(|d| d.write_dir(&out_dir)).map_err(py_err)
}

/// Writes one day's instance and returns the LP file path.
#[pyfunction]
#[pyo3(signature = (data_dir, out_dir, day=0, soc=None, config=None, nm=10, nr=10, seed=1))]
#[allow(clippy::too_many_arguments)]
fn emit(
    data_dir: PathBuf,
    out_dir: PathBuf,
    day: usize,
    soc: Option<f64>,
    config: Option<PathBuf>,
    nm: usize,
    nr: usize,
    seed: u64,
) -> PyResult<String> {
    let spec = run_spec(data_dir, out_dir, config, "base", nm, nr, seed, "external", 600.0, 1e-6)?;
    let soc = soc.unwrap_or(spec.config.soc_initial);
    let path = emit_day(&spec, day, soc).map_err(py_err)?;
    Ok(path.to_string_lossy().into_owned())
}

/// Plans, dispatches and settles one day; returns the day result as JSON.
#[pyfunction]
#[pyo3(signature = (data_dir, out_dir, day=0, soc=None, config=None, case="base", nm=10, nr=10, seed=1,
    backend="external", time_limit=600.0, gap=1e-6))]
#[allow(clippy::too_many_arguments)]
fn plan(
    data_dir: PathBuf,
    out_dir: PathBuf,
    day: usize,
    soc: Option<f64>,
    config: Option<PathBuf>,
    case: &str,
    nm: usize,
    nr: usize,
    seed: u64,
    backend: &str,
    time_limit: f64,
    gap: f64,
) -> PyResult<String> {
    let spec = run_spec(data_dir, out_dir, config, case, nm, nr, seed, backend, time_limit, gap)?;
    let soc = soc.unwrap_or(spec.config.soc_initial);
    to_json(&run_day(&spec, day, soc).map_err(py_err)?)
}

/// Simulates every day of the data set; returns the week report as JSON.
#[pyfunction]
#[pyo3(signature = (data_dir, out_dir, config=None, case="base", nm=10, nr=10, seed=1,
    backend="external", time_limit=600.0, gap=1e-6))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    data_dir: PathBuf,
    out_dir: PathBuf,
    config: Option<PathBuf>,
    case: &str,
    nm: usize,
    nr: usize,
    seed: u64,
    backend: &str,
    time_limit: f64,
    gap: f64,
) -> PyResult<String> {
    let spec = run_spec(data_dir, out_dir, config, case, nm, nr, seed, backend, time_limit, gap)?;
    to_json(&run_week(&spec).map_err(py_err)?)
}

/// Runs all four cases; returns the comparison as JSON.
#[pyfunction]
#[pyo3(signature = (data_dir, out_dir, config=None, nm=10, nr=10, seed=1,
    backend="external", time_limit=600.0, gap=1e-6))]
#[allow(clippy::too_many_arguments)]
fn compare(
    data_dir: PathBuf,
    out_dir: PathBuf,
    config: Option<PathBuf>,
    nm: usize,
    nr: usize,
    seed: u64,
    backend: &str,
    time_limit: f64,
    gap: f64,
) -> PyResult<String> {
    let spec = run_spec(data_dir, out_dir, config, "base", nm, nr, seed, backend, time_limit, gap)?;
    to_json(&compare_cases(&spec).map_err(py_err)?)
}

#[pymodule]
fn pyrecbid(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(emit, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
