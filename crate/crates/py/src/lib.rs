//! Python bindings: link parameters, closed-form error rates, Monte Carlo error
//! counting, capacity quantities and the waveform experiments.

use gnlab::analytic::{self, ErrorRateLimit};
use gnlab::capacity::{self, QuadratureConfig, SearchConfig, SearchGrid, TDistInput};
use gnlab::channel::ChannelModel;
use gnlab::modem::{Constellation, DetectorKind};
use gnlab::montecarlo::{self, SimPlan, StopRule};
use gnlab::waveform::{self, NonstationaryConfig, PulseBroadeningConfig};
use gnlab::{params, NoiseParams as CoreNoise, PowerDbm, SystemParams as CoreParams};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: gnlab::Error) -> PyErr {
    match e {
        gnlab::Error::QuadratureNonConvergence { .. } | gnlab::Error::StepNonConvergence { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Fiber link description; defaults are the reference 10 x 70 km link.
#[pyclass(name = "SystemParams", module = "pygnlab", get_all, set_all, from_py_object)]
#[derive(Clone)]
struct PySystemParams {
    alpha_db_per_km: f64,
    beta2_ps2_per_km: f64,
    gamma_per_w_km: f64,
    spans: u32,
    length_km: f64,
    symbol_rate_gbaud: f64,
    p_ase_w: f64,
    eta_per_w2: f64,
    epsilon: f64,
}

impl From<CoreParams> for PySystemParams {
    fn from(p: CoreParams) -> Self {
        Self {
            alpha_db_per_km: p.alpha_db_per_km,
            beta2_ps2_per_km: p.beta2_ps2_per_km,
            gamma_per_w_km: p.gamma_per_w_km,
            spans: p.spans,
            length_km: p.length_km,
            symbol_rate_gbaud: p.symbol_rate_gbaud,
            p_ase_w: p.p_ase_w,
            eta_per_w2: p.eta_per_w2,
            epsilon: p.epsilon,
        }
    }
}

impl PySystemParams {
    fn core(&self) -> CoreParams {
        CoreParams {
            alpha_db_per_km: self.alpha_db_per_km,
            beta2_ps2_per_km: self.beta2_ps2_per_km,
            gamma_per_w_km: self.gamma_per_w_km,
            spans: self.spans,
            length_km: self.length_km,
            symbol_rate_gbaud: self.symbol_rate_gbaud,
            p_ase_w: self.p_ase_w,
            eta_per_w2: self.eta_per_w2,
            epsilon: self.epsilon,
        }
    }
}

#[pyclass(name = "NoiseParams", module = "pygnlab", from_py_object)]
#[derive(Clone, Copy)]
struct PyNoise {
    inner: CoreNoise,
}

#[pymethods]
impl PyNoise {
    #[new]
    fn new(p_ase: f64, eta: f64) -> Self {
        Self {
            inner: CoreNoise::new(p_ase, eta),
        }
    }

    #[getter]
    fn p_ase(&self) -> f64 {
        self.inner.p_ase
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }

    /// Same ASE, no NLI.
    fn linear(&self) -> Self {
        Self {
            inner: self.inner.linear(),
        }
    }

    fn gn_variance(&self, power: f64) -> f64 {
        self.inner.gn_variance(power)
    }

    fn __repr__(&self) -> String {
        format!("NoiseParams(p_ase={:e}, eta={})", self.inner.p_ase, self.inner.eta)
    }
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p = Self::from(CoreParams::default());
        if let Some(kw) = kwargs {
            let obj = Bound::new(kw.py(), p)?;
            for (k, v) in kw.iter() {
                obj.setattr(k.extract::<String>()?.as_str(), v)?;
            }
            p = obj.borrow().clone();
        }
        p.core().validate().map_err(err)?;
        Ok(p)
    }

    fn validate(&self) -> PyResult<()> {
        self.core().validate().map_err(err)
    }

    fn noise(&self) -> PyNoise {
        PyNoise {
            inner: self.core().noise(),
        }
    }

    /// Single-channel NLI coefficient, W⁻².
    #[pyo3(signature = (dual_polarization = false))]
    fn eta(&self, dual_polarization: bool) -> PyResult<f64> {
        params::eta_single_channel(&self.core(), dual_polarization).map_err(err)
    }

    /// Two-sided memory estimate `2N`.
    fn memory_estimate(&self) -> PyResult<f64> {
        params::memory_estimate(&self.core()).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.core())
    }
}

#[pyfunction]
fn dbm_to_watts(dbm: f64) -> f64 {
    PowerDbm(dbm).watts()
}

#[pyfunction]
fn watts_to_dbm(watts: f64) -> f64 {
    PowerDbm::from_watts(watts).dbm()
}

/// Closed-form 16-QAM BER for memory `memory` at power `power` (W).
#[pyfunction]
fn ber_16qam(power: f64, memory: usize, noise: PyNoise) -> f64 {
    analytic::ber_16qam(power, memory, &noise.inner)
}

#[pyfunction]
fn ser_16qam(power: f64, memory: usize, noise: PyNoise) -> f64 {
    analytic::ser_16qam(power, memory, &noise.inner)
}

/// `(ber, ser)` of the GN-model limit (`"gn_model"`) or the linear channel (`"awgn"`).
#[pyfunction]
#[pyo3(signature = (power, noise, limit = "gn_model"))]
fn ber_ser_limit(power: f64, noise: PyNoise, limit: &str) -> PyResult<(f64, f64)> {
    let limit = match limit {
        "gn_model" => ErrorRateLimit::GnModel,
        "awgn" => ErrorRateLimit::Awgn,
        _ => return Err(PyValueError::new_err(format!("unknown limit {limit:?}"))),
    };
    Ok(analytic::ber_ser_limit(power, &noise.inner, limit))
}

/// `(outcomes, probabilities)` of the neighbour energy of a 16-QAM memory window.
#[pyfunction]
fn memory_energy_pmf(memory: usize, delta: f64) -> (Vec<f64>, Vec<f64>) {
    let pmf = analytic::memory_energy_pmf(memory, delta);
    (pmf.outcomes, pmf.probabilities)
}

/// Monte Carlo 16-QAM error counts. `memory=None` runs the regular GN model.
#[pyfunction]
#[pyo3(signature = (power, memory, noise, symbols_per_trial = 100_000, trials = 10, seed = 1, detector = "med", min_errors = None))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    power: f64,
    memory: Option<usize>,
    noise: PyNoise,
    symbols_per_trial: usize,
    trials: usize,
    seed: u64,
    detector: &str,
    min_errors: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let noise = noise.inner;
    let channel = match memory {
        Some(n) => ChannelModel::finite_memory(n, noise),
        None => ChannelModel::gn(power, noise),
    };
    let detector = match (detector, memory) {
        ("med", _) => DetectorKind::Med,
        ("genie_ml", Some(memory)) => DetectorKind::GenieMl { memory, noise },
        _ => return Err(PyValueError::new_err(format!("detector {detector:?} is not available here"))),
    };
    let stop_rule = min_errors.map_or(StopRule::FixedCount, |errors| StopRule::MinErrors { errors });
    let plan = SimPlan::new(Constellation::qam16_with_power(power), channel, symbols_per_trial, trials, seed)
        .with_detector(detector)
        .with_stop_rule(stop_rule);
    let c = py.detach(|| montecarlo::run_ber_ser(&plan)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("ber", c.ber())?;
    d.set_item("ser", c.ser())?;
    d.set_item("ber_std_error", c.ber_std_error())?;
    d.set_item("ser_std_error", c.ser_std_error())?;
    d.set_item("bit_errors", c.bit_errors)?;
    d.set_item("symbol_errors", c.symbol_errors)?;
    d.set_item("symbols", c.symbols)?;
    d.set_item("trials_run", c.trials_run)?;
    d.set_item("budget_exhausted", c.budget_exhausted)?;
    Ok(d)
}

#[pyfunction]
fn capacity_awgn(power: f64, p_ase: f64) -> PyResult<f64> {
    capacity::capacity_awgn(power, p_ase).map_err(err)
}

#[pyfunction]
fn capacity_gn(power: f64, noise: PyNoise) -> PyResult<f64> {
    capacity::capacity_gn(power, &noise.inner).map_err(err)
}

/// `(power, capacity)` at the GN-capacity maximum.
#[pyfunction]
fn capacity_gn_peak(noise: PyNoise) -> PyResult<(f64, f64)> {
    capacity::capacity_gn_peak(&noise.inner).map_err(err)
}

/// `(value, std_error)` of the lower bound for a t-distributed block input.
#[pyfunction]
#[pyo3(signature = (power, memory, noise, nu, ratio, samples = 10_000, seed = 1, nodes = 512))]
#[allow(clippy::too_many_arguments)]
fn capacity_lb(
    py: Python<'_>,
    power: f64,
    memory: usize,
    noise: PyNoise,
    nu: f64,
    ratio: f64,
    samples: usize,
    seed: u64,
    nodes: usize,
) -> PyResult<(f64, f64)> {
    let input = TDistInput::from_power(power, memory, nu, ratio).map_err(err)?;
    let q = QuadratureConfig {
        nodes,
        ..Default::default()
    };
    let est = py
        .detach(|| capacity::capacity_lb(power, &noise.inner, &input, samples, seed, &q))
        .map_err(err)?;
    Ok((est.value, est.std_error))
}

/// Grid search over `(nu, ratio)`; returns a dict with the best point and its estimate.
#[pyfunction]
#[pyo3(signature = (power, memory, noise, nu = None, ratio = None, samples = 100_000, search_samples = 2_000, seed = 1))]
#[allow(clippy::too_many_arguments)]
fn optimize_lb<'py>(
    py: Python<'py>,
    power: f64,
    memory: usize,
    noise: PyNoise,
    nu: Option<Vec<f64>>,
    ratio: Option<Vec<f64>>,
    samples: usize,
    search_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let default = SearchGrid::default();
    let grid = SearchGrid {
        nu: nu.unwrap_or(default.nu),
        ratio: ratio.unwrap_or(default.ratio),
    };
    let cfg = SearchConfig {
        mc_samples: samples,
        search_samples,
        ..Default::default()
    };
    let b = py
        .detach(|| capacity::optimize_lb(power, memory, &noise.inner, &grid, &cfg, seed))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("value", b.estimate.value)?;
    d.set_item("std_error", b.estimate.std_error)?;
    d.set_item("nu", b.nu)?;
    d.set_item("ratio", b.ratio)?;
    d.set_item("skipped", b.skipped)?;
    Ok(d)
}

/// Running maximum of `(power, value)` pairs.
#[pyfunction]
fn monotone_envelope(curve: Vec<(f64, f64)>) -> PyResult<Vec<(f64, f64)>> {
    capacity::monotone_envelope(&curve).map_err(err)
}

/// `(transmitted_half_width, received_half_width)` in symbol slots.
#[pyfunction]
#[pyo3(signature = (system = None, window_symbols = 1024, step_km = 0.1))]
fn pulse_broadening(py: Python<'_>, system: Option<PySystemParams>, window_symbols: usize, step_km: f64) -> PyResult<(f64, f64)> {
    let params = system.map_or_else(CoreParams::default, |s| s.core());
    let cfg = PulseBroadeningConfig {
        window_symbols,
        step_km,
        ..Default::default()
    };
    let out = py.detach(|| waveform::pulse_broadening(&params, &cfg)).map_err(err)?;
    Ok((out.transmitted_half_width_slots, out.half_width_slots))
}

/// Block-variance ratios and profile correlation of the alternating-power experiment.
#[pyfunction]
#[pyo3(signature = (system = None, seed = 1, block_len = 128, block_pairs = 4, memory = 50))]
fn nonstationary<'py>(
    py: Python<'py>,
    system: Option<PySystemParams>,
    seed: u64,
    block_len: usize,
    block_pairs: usize,
    memory: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let params = system.map_or_else(CoreParams::default, |s| s.core());
    let cfg = NonstationaryConfig {
        block_len,
        block_pairs,
        memory,
        ..Default::default()
    };
    let out = py
        .detach(|| waveform::nonstationary_qpsk_experiment(&params, &cfg, seed))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("nlse_variance_ratio", out.nlse_variance_ratio())?;
    d.set_item("finite_memory_variance_ratio", out.finite_memory_variance_ratio())?;
    d.set_item("gn_variance_ratio", out.gn_variance_ratio())?;
    d.set_item("profile_correlation", out.profile_correlation())?;
    Ok(d)
}

#[pymodule]
fn pygnlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyNoise>()?;
    m.add_function(wrap_pyfunction!(dbm_to_watts, m)?)?;
    m.add_function(wrap_pyfunction!(watts_to_dbm, m)?)?;
    m.add_function(wrap_pyfunction!(ber_16qam, m)?)?;
    m.add_function(wrap_pyfunction!(ser_16qam, m)?)?;
    m.add_function(wrap_pyfunction!(ber_ser_limit, m)?)?;
    m.add_function(wrap_pyfunction!(memory_energy_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_awgn, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_gn, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_gn_peak, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_lb, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_lb, m)?)?;
    m.add_function(wrap_pyfunction!(monotone_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(pulse_broadening, m)?)?;
    m.add_function(wrap_pyfunction!(nonstationary, m)?)?;
    Ok(())
}
