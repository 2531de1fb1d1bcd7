//! Python bindings: noise quantities, simulation, estimation and experiments.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use deconv_core::config::{parse_experiment_str, GridSpec};
use deconv_core::estimator::{
    m_grid_max, penalty_table as core_penalty_table, KnPolicy, PenaltyVariant,
};
use deconv_core::harness::{
    estimate_density, run_experiment as core_run_experiment, simulate_observations, PenaltySettings,
};
use deconv_core::io::to_json_bytes;
use deconv_core::noise_models::{delta_m_scaled, NoiseModel};
use deconv_core::processes::DependentProcess;
use deconv_core::quadrature::QuadratureSpec;
use deconv_core::target_densities::builtin_target;
use deconv_core::DeconvError;

fn to_py(e: DeconvError) -> PyErr {
    let msg = e.to_string();
    match e {
        DeconvError::Config { .. } | DeconvError::Unsupported(_) => PyValueError::new_err(msg),
        DeconvError::Numerical(_) | DeconvError::Range(_) => PyArithmeticError::new_err(msg),
        DeconvError::Io { .. } | DeconvError::Parse { .. } => PyOSError::new_err(msg),
    }
}

fn settings(penalty: Option<&str>, a: f64) -> PyResult<PenaltySettings> {
    Ok(PenaltySettings {
        a,
        variant: penalty
            .map(PenaltyVariant::parse)
            .transpose()
            .map_err(to_py)?,
        ..PenaltySettings::default()
    })
}

/// `Delta(m)` as `(value, ln value)`; the value may overflow to infinity.
#[pyfunction]
#[pyo3(signature = (noise, m, scale = 1.0))]
fn delta_m(noise: &str, m: usize, scale: f64) -> PyResult<(f64, f64)> {
    let model = NoiseModel::builtin(noise, scale).map_err(to_py)?;
    let d = delta_m_scaled(&model, m, &QuadratureSpec::default()).map_err(to_py)?;
    Ok((d.value(), d.ln()))
}

/// Largest resolution `m_n` of the model collection.
#[pyfunction]
#[pyo3(signature = (noise, n, scale = 1.0))]
fn grid_bound(noise: &str, n: usize, scale: f64) -> PyResult<usize> {
    let model = NoiseModel::builtin(noise, scale).map_err(to_py)?;
    Ok(m_grid_max(&model, n).m_n)
}

/// `pen(m)` for `m = 1..=m_max` (default `m_n`).
#[pyfunction]
#[pyo3(signature = (noise, n, scale = 1.0, m_max = None, penalty = None, a = 1.5))]
fn penalty_table(
    noise: &str,
    n: usize,
    scale: f64,
    m_max: Option<usize>,
    penalty: Option<&str>,
    a: f64,
) -> PyResult<Vec<f64>> {
    let model = NoiseModel::builtin(noise, scale).map_err(to_py)?;
    let (cfg, _) = settings(penalty, a)?
        .fixed_or_independent(&model)
        .map_err(to_py)?;
    let m_max = m_max.unwrap_or_else(|| m_grid_max(&model, n).m_n);
    core_penalty_table(&cfg, &model, m_max, n, &QuadratureSpec::default()).map_err(to_py)
}

/// Observations `Z = X + eps` from an iid target or a named process.
#[pyfunction]
#[pyo3(signature = (n, seed, target = "gaussian", process = "iid", noise = "none", noise_scale = 1.0))]
fn simulate(
    n: usize,
    seed: u64,
    target: &str,
    process: &str,
    noise: &str,
    noise_scale: f64,
) -> PyResult<Vec<f64>> {
    let model = NoiseModel::builtin(noise, noise_scale).map_err(to_py)?;
    let p = match process {
        "iid" => DependentProcess::iid(builtin_target(target).map_err(to_py)?),
        "bernoulli_ar" => DependentProcess::bernoulli_ar().map_err(to_py)?,
        "expanding_map" => DependentProcess::expanding_map().map_err(to_py)?,
        other => {
            return Err(PyValueError::new_err(format!(
            "unknown process `{other}`; use an experiment config for contractive_chain and linear"
        )))
        }
    };
    Ok(simulate_observations(&p, &model, n, seed))
}

/// Adaptive estimate on the grid `lo:hi:step`; returns a dict of tables.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (samples, noise, noise_scale = 1.0, grid = (-5.0, 5.0, 0.01), kn = "auto", penalty = None, a = 1.5))]
fn estimate<'py>(
    py: Python<'py>,
    samples: Vec<f64>,
    noise: &str,
    noise_scale: f64,
    grid: (f64, f64, f64),
    kn: &str,
    penalty: Option<&str>,
    a: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let model = NoiseModel::builtin(noise, noise_scale).map_err(to_py)?;
    let g = GridSpec {
        lo: grid.0,
        hi: grid.1,
        step: grid.2,
    };
    g.validate().map_err(to_py)?;
    let xs = g.points();
    let k = KnPolicy::parse(kn).map_err(to_py)?;
    let pen = settings(penalty, a)?;
    let (report, ghat) = py
        .detach(|| estimate_density(&samples, &model, &pen, k, &xs, &QuadratureSpec::default()))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("m_hat", report.m_hat)?;
    out.set_item("m_n", report.m_n)?;
    out.set_item("x", xs)?;
    out.set_item("ghat", ghat)?;
    out.set_item("contrast", report.contrast_values)?;
    out.set_item("penalty", report.penalty_values)?;
    out.set_item("k_n", report.k_n_values)?;
    out.set_item("max_imag", report.max_imag)?;
    Ok(out)
}

/// Run an experiment from config text; returns the report JSON.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &str, seed: u64) -> PyResult<String> {
    let (mut cfg, _) =
        parse_experiment_str(config, std::path::Path::new("<string>")).map_err(to_py)?;
    cfg.seed = seed;
    let bytes = py
        .detach(|| core_run_experiment(&cfg).and_then(|r| to_json_bytes(&r)))
        .map_err(to_py)?;
    String::from_utf8(bytes).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn deconv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", deconv_core::VERSION)?;
    m.add_function(wrap_pyfunction!(delta_m, m)?)?;
    m.add_function(wrap_pyfunction!(grid_bound, m)?)?;
    m.add_function(wrap_pyfunction!(penalty_table, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
