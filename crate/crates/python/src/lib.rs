//! Python bindings: spike trains, the measurement model, the recovery
//! pipelines, the phase experiments and the certification run.
//!
//! Structured reports (certificates, phase tables) cross the boundary as
//! JSON and come back as plain dicts.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use superres::certify::{run_certification, CertifyConfig};
use superres::experiments::{run_phase as run_phase_core, SpikeCount, TrialSpec};
use superres::kernel::{kgamma_eval, KernelSpec};
use superres::model::{self, LowPassData, MultiLowPassData, ProblemConfig};
use superres::recovery::{self, RecoveryOptions, RecoveryTolerance};
use superres::sdp::ProblemKind;

fn err(e: superres::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py_json<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn config(f_cut: usize) -> PyResult<ProblemConfig> {
    ProblemConfig::new(f_cut).map_err(err)
}

fn low_pass(coeffs: Vec<C64>, f_cut: usize) -> PyResult<LowPassData> {
    LowPassData::new(config(f_cut)?, coeffs).map_err(err)
}

/// Point sources on the unit circle: positions in `[0, 1)` and complex amplitudes.
#[pyclass(frozen, skip_from_py_object, module = "superres_py")]
#[derive(Clone)]
struct SpikeTrain {
    inner: model::SpikeTrain,
}

#[pymethods]
impl SpikeTrain {
    #[new]
    fn new(support: Vec<f64>, amplitudes: Vec<C64>) -> PyResult<Self> {
        Ok(Self {
            inner: model::SpikeTrain::new(support, amplitudes).map_err(err)?,
        })
    }

    #[getter]
    fn support(&self) -> Vec<f64> {
        self.inner.support().to_vec()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<C64> {
        self.inner.amplitudes().to_vec()
    }

    fn tv_norm(&self) -> f64 {
        self.inner.tv_norm()
    }

    /// Smallest wrap-around distance, `None` for fewer than two spikes.
    fn min_separation(&self) -> Option<f64> {
        model::min_separation(self.inner.support()).finite()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("SpikeTrain(len={}, support={:?})", self.inner.len(), self.inner.support())
    }
}

#[pyclass(frozen, get_all, module = "superres_py")]
struct Recovery {
    estimate: SpikeTrain,
    /// Dual objective of the solved program.
    objective: f64,
    iterations: usize,
    converged: bool,
    /// Data residual of the final fit.
    residual: f64,
}

#[pyclass(frozen, get_all, module = "superres_py")]
struct Demixing {
    estimate: SpikeTrain,
    spikes: Vec<C64>,
    spike_support: Vec<usize>,
    objective: f64,
    iterations: usize,
    converged: bool,
    residual: f64,
}

#[pyclass(frozen, get_all, module = "superres_py")]
struct GroupRecovery {
    support: Vec<f64>,
    /// One row per support point, one column per signal.
    amplitudes: Vec<Vec<C64>>,
    objective: f64,
    iterations: usize,
    converged: bool,
}

/// Low-pass Fourier coefficients `k = -f_cut..=f_cut` of a spike train.
#[pyfunction]
fn forward_measure(x: &SpikeTrain, f_cut: usize) -> PyResult<Vec<C64>> {
    Ok(model::forward_measure(&x.inner, config(f_cut)?).into_coeffs())
}

#[pyfunction]
#[pyo3(signature = (coeffs, f_cut, polish = true))]
fn recover_tv(py: Python<'_>, coeffs: Vec<C64>, f_cut: usize, polish: bool) -> PyResult<Recovery> {
    let y = low_pass(coeffs, f_cut)?;
    let mut opts = RecoveryOptions::standard();
    opts.locator.polish = polish;
    let r = py.detach(|| recovery::recover_tv(&y, &opts)).map_err(err)?;
    Ok(Recovery {
        estimate: SpikeTrain { inner: r.estimate },
        objective: r.dual.objective,
        iterations: r.dual.residuals.iterations,
        converged: r.dual.residuals.converged,
        residual: r.residual,
    })
}

/// Split the data into line spectra and sparse corruptions.
#[pyfunction]
fn demix(py: Python<'_>, coeffs: Vec<C64>, f_cut: usize, eta: f64) -> PyResult<Demixing> {
    let y = low_pass(coeffs, f_cut)?;
    let opts = RecoveryOptions::standard();
    let r = py.detach(|| recovery::demix(&y, eta, &opts)).map_err(err)?;
    Ok(Demixing {
        estimate: SpikeTrain { inner: r.spectra },
        spikes: r.spikes,
        spike_support: r.spike_support,
        objective: r.dual.objective,
        iterations: r.dual.residuals.iterations,
        converged: r.dual.residuals.converged,
        residual: r.residual,
    })
}

/// Joint recovery from several signals sharing one support. `signals[k]`
/// holds the coefficients of signal `k`.
#[pyfunction]
fn recover_gtv(py: Python<'_>, signals: Vec<Vec<C64>>, f_cut: usize) -> PyResult<GroupRecovery> {
    let cfg = config(f_cut)?;
    if signals.is_empty() {
        return Err(PyValueError::new_err("need at least one signal"));
    }
    if let Some(bad) = signals.iter().find(|s| s.len() != cfg.n()) {
        return Err(PyValueError::new_err(format!("expected {} coefficients, got {}", cfg.n(), bad.len())));
    }
    let data = DMatrix::from_fn(cfg.n(), signals.len(), |i, k| signals[k][i]);
    let y = MultiLowPassData::new(cfg, data).map_err(err)?;
    let opts = RecoveryOptions::standard();
    let r = py.detach(|| recovery::recover_gtv(&y, &opts)).map_err(err)?;
    let amps = r.estimate.amplitudes();
    Ok(GroupRecovery {
        support: r.estimate.support().to_vec(),
        amplitudes: amps.row_iter().map(|row| row.iter().copied().collect()).collect(),
        objective: r.dual.objective,
        iterations: r.dual.residuals.iterations,
        converged: r.dual.residuals.converged,
    })
}

/// Match supports within `tol_t` and amplitudes within relative `tol_a`.
/// Tolerances default to `1e-3 / f_cut` and `1e-3`.
#[pyfunction]
#[pyo3(signature = (truth, estimate, f_cut, tol_t = None, tol_a = None))]
fn check_exact_recovery(
    truth: &SpikeTrain,
    estimate: &SpikeTrain,
    f_cut: usize,
    tol_t: Option<f64>,
    tol_a: Option<f64>,
) -> PyResult<bool> {
    let tol = RecoveryTolerance::standard(config(f_cut)?);
    Ok(recovery::check_exact_recovery(
        &truth.inner,
        &estimate.inner,
        tol_t.unwrap_or(tol.tol_t),
        tol_a.unwrap_or(tol.tol_a),
    ))
}

/// `count` positions with wrap-around separation at least `delta`.
#[pyfunction]
#[pyo3(signature = (count, delta, seed = 0))]
fn random_support(count: usize, delta: f64, seed: u64) -> PyResult<Vec<f64>> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    superres::experiments::random_support(count, delta, &mut rng).map_err(err)
}

/// Derivative of order `order` of the product kernel at `t`; `f_cut` must be
/// at least the reference frequency 1000 of the default bounds.
#[pyfunction]
#[pyo3(signature = (t, f_cut, order = 0))]
fn kernel(t: f64, f_cut: f64, order: usize) -> PyResult<f64> {
    let spec = KernelSpec::default_for(f_cut).map_err(err)?;
    kgamma_eval(&spec, t, order).map_err(err)
}

/// Support-independent certification; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (tau_min = 1.26, eps = 1e-6, f_min = 1e3))]
fn certify(py: Python<'_>, tau_min: f64, eps: f64, f_min: f64) -> PyResult<Bound<'_, PyAny>> {
    let cfg = CertifyConfig {
        tau_min,
        eps,
        f_min,
        ..CertifyConfig::default()
    };
    let report = py.detach(|| run_certification(cfg)).map_err(err)?;
    to_py_json(py, &report)
}

/// Success fractions over a grid of separations (in units of `1/f_cut`).
/// `kind` is "tv", "demix" or "gtv". Returns the phase table as a dict.
#[pyfunction]
#[pyo3(signature = (kind, f_cut, deltas, trials = 10, seed = 0, spikes = None, corruptions = 0, signals = 1, eta = 1.0))]
#[allow(clippy::too_many_arguments)]
fn run_phase<'py>(
    py: Python<'py>,
    kind: &str,
    f_cut: usize,
    deltas: Vec<f64>,
    trials: usize,
    seed: u64,
    spikes: Option<usize>,
    corruptions: usize,
    signals: usize,
    eta: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let kind = match kind.to_ascii_lowercase().as_str() {
        "tv" => ProblemKind::Tv,
        "demix" => ProblemKind::Demix,
        "gtv" => ProblemKind::Gtv,
        other => return Err(PyValueError::new_err(format!("unknown problem kind {other:?}"))),
    };
    let mut spec = TrialSpec::new(kind, f_cut, deltas);
    spec.trials = trials;
    spec.seed = seed;
    if let Some(k) = spikes {
        spec.spikes = SpikeCount::Fixed(k);
    }
    spec.corruptions = corruptions;
    spec.signals = signals;
    spec.eta = eta;
    let table = py.detach(|| run_phase_core(&spec)).map_err(err)?;
    to_py_json(py, &table)
}

#[pymodule]
fn superres_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SpikeTrain>()?;
    m.add_class::<Recovery>()?;
    m.add_class::<Demixing>()?;
    m.add_class::<GroupRecovery>()?;
    m.add_function(wrap_pyfunction!(forward_measure, m)?)?;
    m.add_function(wrap_pyfunction!(recover_tv, m)?)?;
    m.add_function(wrap_pyfunction!(demix, m)?)?;
    m.add_function(wrap_pyfunction!(recover_gtv, m)?)?;
    m.add_function(wrap_pyfunction!(check_exact_recovery, m)?)?;
    m.add_function(wrap_pyfunction!(random_support, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(run_phase, m)?)?;
    Ok(())
}
