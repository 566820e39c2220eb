//! Split-step Fourier propagation of a sampled field envelope through amplified
//! fiber spans, plus the two waveform experiments that check the finite-memory
//! abstraction: single-pulse broadening and a power-switching QPSK sequence.
//!
//! The envelope obeys `dA/dz = -(alpha/2) A - (i beta2/2) d²A/dt² + i gamma |A|² A`,
//! so the linear step multiplies the spectrum by `exp(i beta2 w² h/2 - alpha h/2)`.

use crate::channel::{add_noise, window_energies, BoundaryPolicy};
use crate::error::{invalid, Error, Result};
use crate::modem::Constellation;
use crate::params::{NoiseParams, SystemParams};
use crate::rng::{derive_seed, CounterRng};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpan {
    pub length_km: f64,
    pub alpha_db_per_km: f64,
    pub beta2_ps2_per_km: f64,
    pub gamma_per_w_km: f64,
    /// Amplifier gain at the end of the span.
    pub gain_db: f64,
    pub ase_enabled: bool,
    /// ASE power this amplifier adds within the symbol bandwidth, W.
    pub ase_power_w: f64,
}

impl FiberSpan {
    /// The spans of `params`, each followed by an amplifier that exactly undoes its loss.
    pub fn from_params(params: &SystemParams, ase_enabled: bool) -> Vec<FiberSpan> {
        let length_km = params.length_km / params.spans as f64;
        let span = FiberSpan {
            length_km,
            alpha_db_per_km: params.alpha_db_per_km,
            beta2_ps2_per_km: params.beta2_ps2_per_km,
            gamma_per_w_km: params.gamma_per_w_km,
            gain_db: params.alpha_db_per_km * length_km,
            ase_enabled,
            ase_power_w: params.p_ase_w / params.spans as f64,
        };
        vec![span; params.spans as usize]
    }

    pub fn with_gamma(mut self, gamma_per_w_km: f64) -> Self {
        self.gamma_per_w_km = gamma_per_w_km;
        self
    }

    pub fn with_alpha(mut self, alpha_db_per_km: f64) -> Self {
        self.alpha_db_per_km = alpha_db_per_km;
        self.gain_db = alpha_db_per_km * self.length_km;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.length_km > 0.0) || !self.length_km.is_finite() {
            return Err(invalid("length_km", "span length must be positive"));
        }
        for (name, v) in [
            ("alpha_db_per_km", self.alpha_db_per_km),
            ("beta2_ps2_per_km", self.beta2_ps2_per_km),
            ("gamma_per_w_km", self.gamma_per_w_km),
            ("gain_db", self.gain_db),
            ("ase_power_w", self.ase_power_w),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Sampled complex envelope, √W.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformGrid {
    pub samples: Vec<Complex64>,
    /// Samples per second.
    pub sample_rate: f64,
    /// Samples per symbol.
    pub oversampling: usize,
}

impl WaveformGrid {
    pub fn zeros(len: usize, sample_rate: f64, oversampling: usize) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); len],
            sample_rate,
            oversampling,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Mean of `|A|²`.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    /// `∫|A|² dt`, J.
    pub fn energy(&self) -> f64 {
        self.power() * self.len() as f64 * self.dt()
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.norm_sqr()).collect()
    }

    /// Angular frequency of FFT bin `k`.
    pub fn omega(&self, k: usize) -> f64 {
        let n = self.len() as i64;
        let k = k as i64;
        let signed = if k < (n + 1) / 2 { k } else { k - n };
        2.0 * PI * signed as f64 * self.sample_rate / n as f64
    }

    /// `|FFT|²` of the samples.
    pub fn power_spectrum(&self) -> Vec<f64> {
        let mut buf = self.samples.clone();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        buf.iter().map(|s| s.norm_sqr()).collect()
    }

    /// RMS width of `|A|²` about its centroid, s.
    pub fn rms_width(&self) -> f64 {
        let dt = self.dt();
        let w = self.intensity();
        let total: f64 = w.iter().sum();
        let mean = w.iter().enumerate().map(|(i, v)| i as f64 * v).sum::<f64>() / total;
        let var = w.iter().enumerate().map(|(i, v)| (i as f64 - mean).powi(2) * v).sum::<f64>() / total;
        var.sqrt() * dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    /// `(1 + cos(pi t / T)) / 2` on `|t| <= T`, zero elsewhere; `T` is the
    /// full width at half amplitude.
    RaisedCosineRz,
}

/// Pulse amplitude (unit peak) at time `t`.
pub fn pulse_amplitude(kind: PulseKind, width_s: f64, t: f64) -> f64 {
    match kind {
        PulseKind::RaisedCosineRz => {
            if t.abs() <= width_s {
                0.5 * (1.0 + (PI * t / width_s).cos())
            } else {
                0.0
            }
        }
    }
}

/// One pulse of peak power `peak_power_w`, centred on sample `len/2`.
pub fn pulse_shape(kind: PulseKind, width_ps: f64, peak_power_w: f64, len: usize, sample_rate: f64, oversampling: usize) -> Result<WaveformGrid> {
    if !(width_ps > 0.0) || !(peak_power_w >= 0.0) || len == 0 || !(sample_rate > 0.0) {
        return Err(invalid("pulse", "width, rate and length must be positive and the power non-negative"));
    }
    let width = width_ps * 1e-12;
    let amp = peak_power_w.sqrt();
    let centre = (len / 2) as f64;
    let samples = (0..len)
        .map(|i| Complex64::new(amp * pulse_amplitude(kind, width, (i as f64 - centre) / sample_rate), 0.0))
        .collect();
    Ok(WaveformGrid {
        samples,
        sample_rate,
        oversampling,
    })
}

struct SplitStep {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    omega2: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl SplitStep {
    fn new(grid: &WaveformGrid) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.len();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch = vec![Complex64::default(); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        Self {
            forward,
            inverse,
            omega2: (0..n).map(|k| grid.omega(k).powi(2)).collect(),
            scratch,
        }
    }

    // Dispersion and loss over `h` metres, in place on the time-domain field.
    fn linear(&mut self, field: &mut [Complex64], beta2: f64, alpha: f64, h: f64) {
        self.forward.process_with_scratch(field, &mut self.scratch);
        let scale = (-0.5 * alpha * h).exp() / field.len() as f64;
        for (a, w2) in field.iter_mut().zip(&self.omega2) {
            *a *= Complex64::from_polar(scale, 0.5 * beta2 * w2 * h);
        }
        self.inverse.process_with_scratch(field, &mut self.scratch);
    }

    fn nonlinear(field: &mut [Complex64], gamma: f64, h: f64) {
        if gamma == 0.0 {
            return;
        }
        for a in field.iter_mut() {
            *a *= Complex64::from_polar(1.0, gamma * a.norm_sqr() * h);
        }
    }

    fn span(&mut self, field: &mut [Complex64], span: &FiberSpan, step_m: f64) {
        let length = span.length_km * 1e3;
        let beta2 = span.beta2_ps2_per_km * 1e-27;
        let alpha = span.alpha_db_per_km * std::f64::consts::LN_10 / 10.0 / 1e3;
        let gamma = span.gamma_per_w_km / 1e3;
        if gamma == 0.0 {
            // No nonlinearity: the span is a single linear filter.
            self.linear(field, beta2, alpha, length);
            return;
        }
        let steps = (length / step_m).ceil().max(1.0) as usize;
        let h = length / steps as f64;
        self.linear(field, beta2, alpha, 0.5 * h);
        for i in 0..steps {
            Self::nonlinear(field, gamma, h);
            let next = if i + 1 == steps { 0.5 * h } else { h };
            self.linear(field, beta2, alpha, next);
        }
    }
}

/// Symmetric split-step propagation through `spans`, each followed by its amplifier.
pub fn propagate(grid: &WaveformGrid, spans: &[FiberSpan], step_km: f64, seed: u64) -> Result<WaveformGrid> {
    if !(step_km > 0.0) || !step_km.is_finite() {
        return Err(invalid("step_km", "must be positive"));
    }
    if grid.is_empty() {
        return Err(Error::Empty("waveform grid"));
    }
    for s in spans {
        s.validate()?;
    }
    let mut out = grid.clone();
    let mut stepper = SplitStep::new(grid);
    for (i, span) in spans.iter().enumerate() {
        stepper.span(&mut out.samples, span, step_km * 1e3);
        let gain = 10f64.powf(span.gain_db / 20.0);
        for a in out.samples.iter_mut() {
            *a *= gain;
        }
        if span.ase_enabled && span.ase_power_w > 0.0 {
            let var = span.ase_power_w * grid.oversampling as f64;
            let rng = CounterRng::new(derive_seed(seed, "ase", i as u64));
            for (k, a) in out.samples.iter_mut().enumerate() {
                *a += rng.complex_normal(k as u64) * var.sqrt();
            }
        }
    }
    Ok(out)
}

/// Relative L2 distance between two intensity profiles.
pub fn intensity_change(a: &WaveformGrid, b: &WaveformGrid) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.samples.iter().zip(&b.samples) {
        num += (x.norm_sqr() - y.norm_sqr()).powi(2);
        den += y.norm_sqr().powi(2);
    }
    (num / den).sqrt()
}

/// Propagates with `step_km` and `step_km/2` and returns the finer result, failing
/// when their intensity profiles differ by more than `tolerance`.
pub fn propagate_checked(grid: &WaveformGrid, spans: &[FiberSpan], step_km: f64, seed: u64, tolerance: f64) -> Result<WaveformGrid> {
    let coarse = propagate(grid, spans, step_km, seed)?;
    let fine = propagate(grid, spans, 0.5 * step_km, seed)?;
    let change = intensity_change(&coarse, &fine);
    if change > tolerance {
        return Err(Error::StepNonConvergence { change, tolerance });
    }
    Ok(fine)
}

/// Removes accumulated dispersion `beta2 * length` (given in ps²).
pub fn compensate_dispersion(grid: &WaveformGrid, accumulated_ps2: f64) -> WaveformGrid {
    let mut out = grid.clone();
    let mut stepper = SplitStep::new(grid);
    // propagating over "1 m" with beta2 = -accumulated inverts the phase
    stepper.linear(&mut out.samples, -accumulated_ps2 * 1e-24, 0.0, 1.0);
    out
}

/// RMS width of the intensity, in symbol slots.
pub fn rms_half_width_slots(grid: &WaveformGrid) -> f64 {
    grid.rms_width() * grid.sample_rate / grid.oversampling as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseBroadeningConfig {
    pub width_ps: f64,
    pub peak_power_w: f64,
    pub oversampling: usize,
    /// Window length in symbol slots.
    pub window_symbols: usize,
    pub step_km: f64,
}

impl Default for PulseBroadeningConfig {
    fn default() -> Self {
        Self {
            width_ps: 15.6,
            peak_power_w: 1e-4,
            oversampling: 16,
            window_symbols: 1024,
            step_km: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseBroadening {
    pub transmitted: WaveformGrid,
    pub received: WaveformGrid,
    /// RMS temporal half-width at the receiver, in symbol slots.
    pub half_width_slots: f64,
    pub transmitted_half_width_slots: f64,
}

/// A single pulse sent over the link with ASE off, received without dispersion compensation.
pub fn pulse_broadening(params: &SystemParams, config: &PulseBroadeningConfig) -> Result<PulseBroadening> {
    params.validate()?;
    let fs = params.symbol_rate_hz() * config.oversampling as f64;
    let len = (config.window_symbols * config.oversampling).next_power_of_two();
    let tx = pulse_shape(PulseKind::RaisedCosineRz, config.width_ps, config.peak_power_w, len, fs, config.oversampling)?;
    let spans = FiberSpan::from_params(params, false);
    let rx = propagate(&tx, &spans, config.step_km, 0)?;
    Ok(PulseBroadening {
        half_width_slots: rms_half_width_slots(&rx),
        transmitted_half_width_slots: rms_half_width_slots(&tx),
        transmitted: tx,
        received: rx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonstationaryConfig {
    pub block_len: usize,
    /// Alternating high/low block pairs.
    pub block_pairs: usize,
    pub high_power_w: f64,
    pub low_power_w: f64,
    pub pulse_width_ps: f64,
    pub oversampling: usize,
    pub step_km: f64,
    /// Memory of the finite-memory model panel.
    pub memory: usize,
}

impl Default for NonstationaryConfig {
    fn default() -> Self {
        Self {
            block_len: 128,
            block_pairs: 4,
            high_power_w: 4e-3,
            low_power_w: 0.0,
            pulse_width_ps: 15.6,
            oversampling: 16,
            step_km: 0.1,
            memory: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonstationaryResult {
    pub transmitted: Vec<Complex64>,
    /// NLSE chain output after per-block gain and phase removal.
    pub nlse: Vec<Complex64>,
    pub finite_memory: Vec<Complex64>,
    pub gn: Vec<Complex64>,
    /// Noise variance the finite-memory model assigns to each symbol.
    pub finite_memory_variance: Vec<f64>,
    /// True for symbols of high-power blocks.
    pub high_block: Vec<bool>,
    pub block_len: usize,
    pub memory: usize,
}

/// Mean `|y - x|²` over high blocks divided by the same over low blocks.
pub fn block_variance_ratio(tx: &[Complex64], rx: &[Complex64], high: &[bool]) -> f64 {
    let (mut hi, mut nh, mut lo, mut nl) = (0.0, 0usize, 0.0, 0usize);
    for ((x, y), &h) in tx.iter().zip(rx).zip(high) {
        let e = (y - x).norm_sqr();
        if h {
            hi += e;
            nh += 1;
        } else {
            lo += e;
            nl += 1;
        }
    }
    (hi / nh as f64) / (lo / nl as f64)
}

/// Spearman rank correlation, ties given their average rank.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = 0.5 * (i + j) as f64;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

impl NonstationaryResult {
    pub fn nlse_variance_ratio(&self) -> f64 {
        block_variance_ratio(&self.transmitted, &self.nlse, &self.high_block)
    }

    pub fn finite_memory_variance_ratio(&self) -> f64 {
        block_variance_ratio(&self.transmitted, &self.finite_memory, &self.high_block)
    }

    pub fn gn_variance_ratio(&self) -> f64 {
        block_variance_ratio(&self.transmitted, &self.gn, &self.high_block)
    }

    /// Rank correlation between the NLSE squared error and the finite-memory variance profile.
    pub fn profile_correlation(&self) -> f64 {
        let err: Vec<f64> = self.transmitted.iter().zip(&self.nlse).map(|(x, y)| (y - x).norm_sqr()).collect();
        spearman(&err, &self.finite_memory_variance)
    }
}

/// QPSK in alternating high- and low-power blocks, sent through the NLSE chain, the
/// finite-memory model and the GN model at the average power, all with ASE off.
pub fn nonstationary_qpsk_experiment(params: &SystemParams, config: &NonstationaryConfig, seed: u64) -> Result<NonstationaryResult> {
    params.validate()?;
    if config.block_len == 0 || config.block_pairs == 0 || config.oversampling == 0 {
        return Err(invalid("nonstationary", "block length, block count and oversampling must be positive"));
    }
    let total = 2 * config.block_len * config.block_pairs;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "symbols", 0));
    let high_const = Constellation::qpsk(config.high_power_w);
    let low_const = Constellation::qpsk(config.low_power_w);
    let high_block: Vec<bool> = (0..total).map(|k| (k / config.block_len) % 2 == 0).collect();
    let transmitted: Vec<Complex64> = high_block
        .iter()
        .map(|&h| {
            let c = if h { &high_const } else { &low_const };
            c.points()[rng.random_range(0..c.len())]
        })
        .collect();

    // Pulse train on a periodic grid; the pulse energy is one symbol period so a
    // symbol of power P carries average power P.
    let os = config.oversampling;
    let fs = params.symbol_rate_hz() * os as f64;
    let ts = 1.0 / params.symbol_rate_hz();
    let width = config.pulse_width_ps * 1e-12;
    let half_span = (width * fs).ceil() as i64;
    let shape: Vec<f64> = (-half_span..=half_span)
        .map(|j| pulse_amplitude(PulseKind::RaisedCosineRz, width, j as f64 / fs))
        .collect();
    let energy: f64 = shape.iter().map(|v| v * v).sum::<f64>() / fs;
    let norm = (ts / energy).sqrt();
    let shape: Vec<f64> = shape.iter().map(|v| v * norm).collect();
    let n = total * os;
    let mut grid = WaveformGrid::zeros(n, fs, os);
    for (k, x) in transmitted.iter().enumerate() {
        for (j, p) in shape.iter().enumerate() {
            let idx = (k as i64 * os as i64 + j as i64 - half_span).rem_euclid(n as i64) as usize;
            grid.samples[idx] += x * p;
        }
    }

    let linear_params = SystemParams { p_ase_w: 0.0, ..*params };
    let spans = FiberSpan::from_params(&linear_params, false);
    let rx = propagate(&grid, &spans, config.step_km, seed)?;
    let rx = compensate_dispersion(&rx, params.beta2_ps2_per_km * params.length_km);

    // Matched filter sampled at pulse centres: y_k = (1/Ts) ∫ r(t) p(t - k Ts) dt.
    let mut received: Vec<Complex64> = (0..total)
        .map(|k| {
            let mut acc = Complex64::default();
            for (j, p) in shape.iter().enumerate() {
                let idx = (k as i64 * os as i64 + j as i64 - half_span).rem_euclid(n as i64) as usize;
                acc += rx.samples[idx] * p;
            }
            acc / (fs * ts)
        })
        .collect();
    // Least-squares complex gain per block removes the deterministic nonlinear rotation.
    for b in 0..2 * config.block_pairs {
        let range = b * config.block_len..(b + 1) * config.block_len;
        let (mut num, mut den) = (Complex64::default(), 0.0);
        for k in range.clone() {
            num += received[k] * transmitted[k].conj();
            den += transmitted[k].norm_sqr();
        }
        if den > 0.0 {
            let g = num / den;
            for k in range {
                received[k] /= g;
            }
        }
    }

    let noise = NoiseParams::new(0.0, params.eta_per_w2);
    let energies: Vec<f64> = transmitted.iter().map(|x| x.norm_sqr()).collect();
    let finite_memory_variance: Vec<f64> = window_energies(&energies, config.memory, BoundaryPolicy::Wrap)
        .into_iter()
        .map(|a| noise.rho(a, config.memory))
        .collect();
    let finite_memory = add_noise(&transmitted, &finite_memory_variance, derive_seed(seed, "finite_memory", 0));
    let average = energies.iter().sum::<f64>() / total as f64;
    let gn_var = vec![noise.gn_variance(average); total];
    let gn = add_noise(&transmitted, &gn_var, derive_seed(seed, "gn", 0));

    Ok(NonstationaryResult {
        transmitted,
        nlse: received,
        finite_memory,
        gn,
        finite_memory_variance,
        high_block,
        block_len: config.block_len,
        memory: config.memory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_grid(len: usize) -> WaveformGrid {
        WaveformGrid::zeros(len, 32e9 * 16.0, 16)
    }

    fn gaussian_field(grid: &WaveformGrid, t0: f64, peak: f64) -> WaveformGrid {
        let mut g = grid.clone();
        let c = (g.len() / 2) as f64;
        for (i, s) in g.samples.iter_mut().enumerate() {
            let t = (i as f64 - c) / grid.sample_rate;
            *s = Complex64::new(peak.sqrt() * (-0.5 * t * t / (t0 * t0)).exp(), 0.0);
        }
        g
    }

    fn lossless_linear(length_km: f64, beta2: f64) -> FiberSpan {
        FiberSpan {
            length_km,
            alpha_db_per_km: 0.0,
            beta2_ps2_per_km: beta2,
            gamma_per_w_km: 0.0,
            gain_db: 0.0,
            ase_enabled: false,
            ase_power_w: 0.0,
        }
    }

    #[test]
    fn pulse_shape_properties() {
        let fs = 32e9 * 16.0;
        let g = pulse_shape(PulseKind::RaisedCosineRz, 15.6, 1e-4, 1024, fs, 16).unwrap();
        let peak = g.samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        assert_eq!(peak, 1e-4f64.sqrt());
        // half-amplitude crossings
        let half = 0.5 * peak;
        let above: Vec<usize> = (0..g.len()).filter(|&i| g.samples[i].norm() >= half).collect();
        let width = (above.last().unwrap() - above[0] + 1) as f64 / fs;
        assert!((width - 15.6e-12).abs() <= 1.0 / fs, "{width}");
        let g2 = pulse_shape(PulseKind::RaisedCosineRz, 15.6, 2e-4, 1024, fs, 16).unwrap();
        assert!((g2.energy() / g.energy() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dispersion_is_all_pass() {
        let g = gaussian_field(&test_grid(4096), 10e-12, 1e-3);
        let out = propagate(&g, &[lossless_linear(100.0, -21.7)], 0.1, 0).unwrap();
        let a = g.power_spectrum();
        let b = out.power_spectrum();
        let max = a.iter().cloned().fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * max);
        }
        assert!((out.energy() / g.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_propagation_matches_gaussian_closed_form() {
        let t0 = 10e-12;
        let grid = test_grid(8192);
        let g = gaussian_field(&grid, t0, 1.0);
        let beta2 = -21.7e-27;
        let z = 150e3;
        let span = lossless_linear(150.0, -21.7);
        let out = propagate(&g, &[span], 0.5, 0).unwrap();
        let c = (grid.len() / 2) as f64;
        let q = Complex64::new(t0 * t0, -beta2 * z);
        let (mut num, mut den) = (0.0, 0.0);
        for (i, s) in out.samples.iter().enumerate() {
            let t = (i as f64 - c) / grid.sample_rate;
            let want = Complex64::new(t0, 0.0) / q.sqrt() * (-(t * t) / (2.0 * q)).exp();
            num += (s - want).norm_sqr();
            den += want.norm_sqr();
        }
        assert!((num / den).sqrt() < 1e-8, "{}", (num / den).sqrt());
    }

    #[test]
    fn stepped_linear_path_matches_single_filter() {
        let g = gaussian_field(&test_grid(4096), 8e-12, 1e-3);
        let plain = propagate(&g, &[lossless_linear(50.0, -21.7)], 1.0, 0).unwrap();
        let mut stepper = SplitStep::new(&g);
        let mut f = g.samples.clone();
        for _ in 0..50 {
            stepper.linear(&mut f, -21.7e-27, 0.0, 1e3);
        }
        let diff: f64 = f.iter().zip(&plain.samples).map(|(a, b)| (a - b).norm_sqr()).sum();
        let norm: f64 = plain.samples.iter().map(|a| a.norm_sqr()).sum();
        assert!((diff / norm).sqrt() < 1e-12);
    }

    #[test]
    fn lossy_span_with_ideal_gain_conserves_energy_when_linear() {
        let g = gaussian_field(&test_grid(4096), 10e-12, 1e-3);
        let span = lossless_linear(70.0, -21.7).with_alpha(0.2);
        let out = propagate(&g, &[span, span], 0.1, 0).unwrap();
        assert!((out.energy() / g.energy() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn split_step_second_order_convergence() {
        let g = gaussian_field(&test_grid(2048), 5e-12, 0.5);
        let span = lossless_linear(20.0, -21.7).with_gamma(1.27);
        let reference = propagate(&g, &[span], 0.0125, 0).unwrap();
        let err = |h: f64| {
            let out = propagate(&g, &[span], h, 0).unwrap();
            out.samples.iter().zip(&reference.samples).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        };
        let ratio = err(0.4) / err(0.2);
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
        assert!(propagate_checked(&g, &[span], 0.1, 0, 1e-3).is_ok());
        assert!(matches!(propagate_checked(&g, &[span], 10.0, 0, 1e-9), Err(Error::StepNonConvergence { .. })));
    }

    #[test]
    fn dispersion_compensation_restores_input() {
        let g = gaussian_field(&test_grid(4096), 10e-12, 1e-3);
        let out = propagate(&g, &[lossless_linear(300.0, -21.7)], 1.0, 0).unwrap();
        let back = compensate_dispersion(&out, -21.7 * 300.0);
        let diff: f64 = back.samples.iter().zip(&g.samples).map(|(a, b)| (a - b).norm_sqr()).sum();
        let norm: f64 = g.samples.iter().map(|a| a.norm_sqr()).sum();
        assert!((diff / norm).sqrt() < 1e-10);
    }

    #[test]
    fn ase_injection_matches_requested_power() {
        let g = test_grid(1 << 16);
        let span = FiberSpan {
            ase_enabled: true,
            ase_power_w: 1e-6,
            ..lossless_linear(1.0, 0.0)
        };
        let out = propagate(&g, &[span, span], 1.0, 3).unwrap();
        // per-sample variance = 2 amplifiers x P x oversampling
        let want = 2.0 * 1e-6 * 16.0;
        assert!((out.power() / want - 1.0).abs() < 0.02, "{}", out.power());
        let again = propagate(&g, &[span, span], 1.0, 3).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn spearman_basics() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&a, &[10.0, 20.0, 30.0, 40.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&a, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        // ties: ranks (0.5, 0.5, 2, 3)
        let t = spearman(&[0.0, 0.0, 1.0, 2.0], &a);
        assert!(t > 0.9 && t < 1.0);
    }

    #[test]
    fn variance_ratio_helper() {
        let tx = vec![Complex64::new(0.0, 0.0); 4];
        let rx = vec![Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert_eq!(block_variance_ratio(&tx, &rx, &[true, true, false, false]), 4.0);
    }
}
