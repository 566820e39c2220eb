//! Physical link constants, unit handling and nonlinear-interference coefficients.
//!
//! Values are stored in the units engineers quote them in (dB/km, ps²/km, Gbaud)
//! and converted to SI on access. All formulas below operate in SI.

use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, LN_10, PI};

/// Fiber link description. `Default` gives the reference single-channel link:
/// 10 x 70 km of standard fiber at 32 Gbaud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// Fiber attenuation, dB/km.
    pub alpha_db_per_km: f64,
    /// Group-velocity dispersion, ps²/km (signed).
    pub beta2_ps2_per_km: f64,
    /// Nonlinear coefficient, 1/(W km).
    pub gamma_per_w_km: f64,
    /// Number of amplifier spans.
    pub spans: u32,
    /// Total system length, km.
    pub length_km: f64,
    /// Symbol rate, Gbaud.
    pub symbol_rate_gbaud: f64,
    /// Total ASE noise power, W.
    pub p_ase_w: f64,
    /// NLI coefficient used by the channel models, W⁻².
    pub eta_per_w2: f64,
    /// Span-decorrelation exponent in [0, 1].
    pub epsilon: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            alpha_db_per_km: 0.2,
            beta2_ps2_per_km: -21.7,
            gamma_per_w_km: 1.27,
            spans: 10,
            length_km: 700.0,
            symbol_rate_gbaud: 32.0,
            p_ase_w: 4.1e-6,
            eta_per_w2: 7244.0,
            epsilon: 0.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("alpha_db_per_km", self.alpha_db_per_km),
            ("gamma_per_w_km", self.gamma_per_w_km),
            ("length_km", self.length_km),
            ("symbol_rate_gbaud", self.symbol_rate_gbaud),
            ("p_ase_w", self.p_ase_w),
            ("eta_per_w2", self.eta_per_w2),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !self.beta2_ps2_per_km.is_finite() {
            return Err(invalid("beta2_ps2_per_km", "must be finite"));
        }
        if self.spans < 1 {
            return Err(invalid("spans", "at least one span is required"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid("epsilon", format!("must lie in [0, 1], got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Power attenuation in nepers per metre.
    pub fn alpha_np_per_m(&self) -> f64 {
        self.alpha_db_per_km * LN_10 / 10.0 / 1e3
    }

    /// Dispersion in s²/m.
    pub fn beta2_s2_per_m(&self) -> f64 {
        self.beta2_ps2_per_km * 1e-24 / 1e3
    }

    pub fn gamma_per_w_m(&self) -> f64 {
        self.gamma_per_w_km / 1e3
    }

    pub fn length_m(&self) -> f64 {
        self.length_km * 1e3
    }

    pub fn span_length_m(&self) -> f64 {
        self.length_m() / self.spans as f64
    }

    pub fn symbol_rate_hz(&self) -> f64 {
        self.symbol_rate_gbaud * 1e9
    }

    pub fn noise(&self) -> NoiseParams {
        NoiseParams {
            p_ase: self.p_ase_w,
            eta: self.eta_per_w2,
        }
    }
}

/// Additive-noise constants of the GN-type channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// ASE noise power, W.
    pub p_ase: f64,
    /// NLI coefficient, W⁻².
    pub eta: f64,
}

impl NoiseParams {
    pub fn new(p_ase: f64, eta: f64) -> Self {
        Self { p_ase, eta }
    }

    /// Linear channel with the same ASE level.
    pub fn linear(&self) -> Self {
        Self { eta: 0.0, ..*self }
    }

    /// Noise variance given the total energy `a` of a `(2N+1)`-symbol window:
    /// `P_ASE + eta (a / (2N+1))^3`.
    #[inline]
    pub fn rho(&self, window_energy: f64, memory: usize) -> f64 {
        let mean = window_energy / (2 * memory + 1) as f64;
        self.p_ase + self.eta * mean * mean * mean
    }

    /// Regular GN-model noise variance `P_ASE + eta P^3`.
    #[inline]
    pub fn gn_variance(&self, power: f64) -> f64 {
        self.p_ase + self.eta * power * power * power
    }
}

/// Average power in dBm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PowerDbm(pub f64);

impl PowerDbm {
    pub fn from_watts(watts: f64) -> Self {
        Self(10.0 * (watts / 1e-3).log10())
    }

    pub fn watts(self) -> f64 {
        1e-3 * 10f64.powf(self.0 / 10.0)
    }

    pub fn dbm(self) -> f64 {
        self.0
    }
}

/// Lumped-amplification single-channel NLI coefficient
/// `c γ²/α² M^(1+ε) tanh(α / (4|β₂| Rs²))`, with `c = 3` for dual polarization
/// and `c = 2` for single polarization.
pub fn eta_single_channel(params: &SystemParams, dual_polarization: bool) -> Result<f64> {
    let alpha = params.alpha_np_per_m();
    let beta2 = params.beta2_s2_per_m().abs();
    let rs = params.symbol_rate_hz();
    if alpha <= 0.0 {
        return Err(invalid("alpha_db_per_km", "attenuation must be > 0"));
    }
    if rs <= 0.0 {
        return Err(invalid("symbol_rate_gbaud", "symbol rate must be > 0"));
    }
    if beta2 <= 0.0 {
        return Err(invalid("beta2_ps2_per_km", "dispersion must be nonzero"));
    }
    let coefficient = if dual_polarization { 3.0 } else { 2.0 };
    let gamma = params.gamma_per_w_m();
    let spans = (params.spans as f64).powf(1.0 + params.epsilon);
    Ok(coefficient * gamma * gamma / (alpha * alpha)
        * spans
        * (alpha / (4.0 * beta2 * rs * rs)).tanh())
}

/// Which distributed-amplification WDM formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WdmVariant {
    /// `4γ²L/(π|β₂|B²) ln(2π e |β₂| L B²)`
    Splett,
    /// `16γ²L/(27π|β₂|Rs²) ln((2/3) π² |β₂| L B²)`
    Bosco,
}

/// Distributed-amplification WDM NLI coefficient for total bandwidth `total_bandwidth_hz`.
pub fn eta_wdm_distributed(
    params: &SystemParams,
    total_bandwidth_hz: f64,
    variant: WdmVariant,
) -> Result<f64> {
    if !(total_bandwidth_hz > 0.0) {
        return Err(invalid("total_bandwidth", "must be > 0"));
    }
    let beta2 = params.beta2_s2_per_m().abs();
    if beta2 <= 0.0 {
        return Err(invalid("beta2_ps2_per_km", "dispersion must be nonzero"));
    }
    let length = params.length_m();
    let gamma = params.gamma_per_w_m();
    let b2 = total_bandwidth_hz * total_bandwidth_hz;
    let (prefactor, argument) = match variant {
        WdmVariant::Splett => (
            4.0 * gamma * gamma * length / (PI * beta2 * b2),
            2.0 * PI * E * beta2 * length * b2,
        ),
        WdmVariant::Bosco => {
            let rs = params.symbol_rate_hz();
            if rs <= 0.0 {
                return Err(invalid("symbol_rate_gbaud", "symbol rate must be > 0"));
            }
            (
                16.0 * gamma * gamma * length / (27.0 * PI * beta2 * rs * rs),
                2.0 / 3.0 * PI * PI * beta2 * length * b2,
            )
        }
    };
    if !(argument > 1.0) {
        return Err(Error::LogArgumentOutOfRange { argument });
    }
    Ok(prefactor * argument.ln())
}

/// Two-sided dispersive memory in symbols, `2N ≈ 2π|β₂| L Rs²`.
pub fn memory_estimate(params: &SystemParams) -> Result<f64> {
    let beta2 = params.beta2_s2_per_m();
    if beta2 == 0.0 {
        return Err(invalid("beta2_ps2_per_km", "dispersion must be nonzero"));
    }
    let rs = params.symbol_rate_hz();
    Ok(2.0 * PI * beta2.abs() * params.length_m() * rs * rs)
}
