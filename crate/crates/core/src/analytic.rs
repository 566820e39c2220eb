//! Exact 16-QAM bit and symbol error rates of the MED detector over the
//! finite-memory GN model, and their infinite-memory and linear limits.
//!
//! The neighbour energy `‖x_mem‖²` of an i.i.d. 16-QAM sequence takes the values
//! `δ_l = (4N + 8l)Δ²` with binomial weights `C(4N, l) / 4^(2N)`; conditioned on it
//! the per-symbol noise is Gaussian with one of three variances `γ_{l,t,N}`
//! (`t ∈ {1, 5, 9}` for the inner, edge and corner energy classes) and the error
//! probabilities are sums of Gaussian tail terms.

use crate::params::NoiseParams;
use crate::special::{q_function, q_function_squared};
use serde::{Deserialize, Serialize};

/// Energy classes `t`: `|s_i|² = t P / 5` for inner, edge and corner points.
pub const ENERGY_CLASSES: [u32; 3] = [1, 5, 9];

/// `B[r][t]` for `r ∈ {1, 3, 5}` (rows) and `t ∈ {1, 5, 9}` (columns).
pub const BER_COEFFICIENTS: [[f64; 3]; 3] = [[2.0, 3.0, 1.0], [1.0, 2.0, 1.0], [0.0, -1.0, -1.0]];

/// Distance multiples paired with the rows of [`BER_COEFFICIENTS`].
pub const BER_DISTANCES: [f64; 3] = [1.0, 3.0, 5.0];

/// `S[e][t]` for exponents `e ∈ {1, 2}` (rows) and `t ∈ {1, 5, 9}` (columns).
pub const SER_COEFFICIENTS: [[f64; 3]; 2] = [[4.0, 6.0, 2.0], [-4.0, -4.0, -1.0]];

/// The coefficient tables of both error-rate sums, kept together for callers that
/// want to inspect or serialize them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub ber: [[f64; 3]; 3],
    pub ser: [[f64; 3]; 2],
}

impl Default for CoefficientSet {
    fn default() -> Self {
        Self {
            ber: BER_COEFFICIENTS,
            ser: SER_COEFFICIENTS,
        }
    }
}

/// Distribution of the neighbour energy `‖X_mem‖²` over the `2N` memory symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEnergyPmf {
    pub outcomes: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl MemoryEnergyPmf {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.outcomes
            .iter()
            .zip(&self.probabilities)
            .map(|(o, p)| o * p)
            .sum()
    }
}

/// `C(4N, l) / 4^(2N)` for `l = 0..=4N`, accumulated in log space.
pub fn binomial_weights(memory: usize) -> Vec<f64> {
    let n = 4 * memory;
    let mut log_w = -(n as f64) * std::f64::consts::LN_2;
    let mut out = Vec::with_capacity(n + 1);
    out.push(log_w.exp());
    for l in 0..n {
        log_w += ((n - l) as f64).ln() - ((l + 1) as f64).ln();
        out.push(log_w.exp());
    }
    out
}

/// PMF of `‖X_mem‖²` for i.i.d. uniform 16-QAM with half-distance `delta`.
pub fn memory_energy_pmf(memory: usize, delta: f64) -> MemoryEnergyPmf {
    let d2 = delta * delta;
    let outcomes = (0..=4 * memory)
        .map(|l| (4 * memory + 8 * l) as f64 * d2)
        .collect();
    MemoryEnergyPmf {
        outcomes,
        probabilities: binomial_weights(memory),
    }
}

/// Conditional noise variances `γ_{l,t,N}`, indexed `[l][class]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    pub memory: usize,
    pub values: Vec<[f64; 3]>,
}

pub fn gamma_table(power: f64, memory: usize, noise: &NoiseParams) -> GammaTable {
    let span = (2 * memory + 1) as f64;
    let scale = noise.eta / (span * span * span);
    let values = (0..=4 * memory)
        .map(|l| {
            ENERGY_CLASSES.map(|t| {
                let e = power * (2 * memory + 4 * l + t as usize) as f64 / 5.0;
                noise.p_ase + scale * e * e * e
            })
        })
        .collect();
    GammaTable { memory, values }
}

fn zero_power(power: f64) -> bool {
    power <= 0.0
}

/// BER of the MED detector for 16-QAM at average power `power` (W) and memory `memory`.
pub fn ber_16qam(power: f64, memory: usize, noise: &NoiseParams) -> f64 {
    if zero_power(power) {
        return 0.5;
    }
    let weights = binomial_weights(memory);
    let table = gamma_table(power, memory, noise);
    let mut total = 0.0;
    for (w, gammas) in weights.iter().zip(&table.values) {
        let mut inner = 0.0;
        for (t, &gamma) in gammas.iter().enumerate() {
            for (r, &dist) in BER_DISTANCES.iter().enumerate() {
                let b = BER_COEFFICIENTS[r][t];
                if b != 0.0 {
                    inner += b * q_function((dist * dist * power / (5.0 * gamma)).sqrt());
                }
            }
        }
        total += w * inner;
    }
    (total / 8.0).clamp(0.0, 1.0)
}

/// SER of the MED detector for 16-QAM at average power `power` (W) and memory `memory`.
pub fn ser_16qam(power: f64, memory: usize, noise: &NoiseParams) -> f64 {
    if zero_power(power) {
        return 15.0 / 16.0;
    }
    let weights = binomial_weights(memory);
    let table = gamma_table(power, memory, noise);
    let mut total = 0.0;
    for (w, gammas) in weights.iter().zip(&table.values) {
        let mut inner = 0.0;
        for (t, &gamma) in gammas.iter().enumerate() {
            let arg = (power / (5.0 * gamma)).sqrt();
            inner += SER_COEFFICIENTS[0][t] * q_function(arg) + SER_COEFFICIENTS[1][t] * q_function_squared(arg);
        }
        total += w * inner;
    }
    (total / 4.0).clamp(0.0, 1.0)
}

/// Closed-form 16-QAM `(BER, SER)` on a Gaussian channel with SNR `snr = P / sigma²`.
pub fn ber_ser_at_snr(snr: f64) -> (f64, f64) {
    if snr <= 0.0 {
        return (0.5, 15.0 / 16.0);
    }
    let q1 = q_function((snr / 5.0).sqrt());
    let q3 = q_function((9.0 * snr / 5.0).sqrt());
    let q5 = q_function((5.0 * snr).sqrt());
    let ber = 0.75 * q1 + 0.5 * q3 - 0.25 * q5;
    let ser = 3.0 * q1 - 2.25 * q_function_squared((snr / 5.0).sqrt());
    (ber.clamp(0.0, 1.0), ser.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorRateLimit {
    /// Memory `N -> ∞`: SNR `P / (P_ASE + eta P³)`.
    GnModel,
    /// Memoryless linear channel: SNR `P / P_ASE`.
    Awgn,
}

pub fn ber_ser_limit(power: f64, noise: &NoiseParams, limit: ErrorRateLimit) -> (f64, f64) {
    if zero_power(power) {
        return (0.5, 15.0 / 16.0);
    }
    let variance = match limit {
        ErrorRateLimit::GnModel => noise.gn_variance(power),
        ErrorRateLimit::Awgn => noise.p_ase,
    };
    ber_ser_at_snr(power / variance)
}
