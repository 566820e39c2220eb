//! Discrete-time channel models: memoryless AWGN, the regular GN model and the
//! finite-memory GN model, where the noise variance at time `k` follows the
//! empirical power of the `2N+1` symbols centred on `k`.

use crate::params::NoiseParams;
use crate::rng::CounterRng;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn,
    /// Regular GN model driven by the statistical power `power` (W).
    Gn { power: f64 },
    /// Finite-memory GN model with one-sided memory `memory`.
    FiniteMemoryGn { memory: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub noise: NoiseParams,
}

impl ChannelModel {
    pub fn awgn(p_ase: f64) -> Self {
        Self {
            kind: ChannelKind::Awgn,
            noise: NoiseParams::new(p_ase, 0.0),
        }
    }

    pub fn gn(power: f64, noise: NoiseParams) -> Self {
        Self {
            kind: ChannelKind::Gn { power },
            noise,
        }
    }

    pub fn finite_memory(memory: usize, noise: NoiseParams) -> Self {
        Self {
            kind: ChannelKind::FiniteMemoryGn { memory },
            noise,
        }
    }

    pub fn memory(&self) -> Option<usize> {
        match self.kind {
            ChannelKind::FiniteMemoryGn { memory } => Some(memory),
            _ => None,
        }
    }
}

/// How the memory window is completed beyond the ends of a finite block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Circular continuation.
    #[default]
    Wrap,
    /// Zero symbols outside the block.
    ZeroPad,
    /// Mirror about the edge symbols (edges not repeated).
    Reflect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub symbols: Vec<Complex64>,
    pub boundary: BoundaryPolicy,
}

impl SymbolBlock {
    pub fn new(symbols: Vec<Complex64>) -> Self {
        Self {
            symbols,
            boundary: BoundaryPolicy::default(),
        }
    }

    pub fn with_boundary(mut self, boundary: BoundaryPolicy) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.symbols.iter().map(|s| s.norm_sqr()).collect()
    }
}

fn reflect_index(i: i64, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as i64 - 1);
    let m = i.rem_euclid(period);
    if m < n as i64 {
        m as usize
    } else {
        (period - m) as usize
    }
}

#[inline]
fn energy_at(energies: &[f64], i: i64, boundary: BoundaryPolicy) -> f64 {
    let n = energies.len();
    match boundary {
        BoundaryPolicy::Wrap => energies[i.rem_euclid(n as i64) as usize],
        BoundaryPolicy::ZeroPad => {
            if i < 0 || i >= n as i64 {
                0.0
            } else {
                energies[i as usize]
            }
        }
        BoundaryPolicy::Reflect => energies[reflect_index(i, n)],
    }
}

const RESUM_INTERVAL: usize = 1024;

/// Sum of `energies[k-N..=k+N]` for every `k`, with the block edges completed by `boundary`.
pub fn window_energies(energies: &[f64], memory: usize, boundary: BoundaryPolicy) -> Vec<f64> {
    let n = energies.len();
    let mut out = Vec::with_capacity(n);
    let m = memory as i64;
    let exact = |k: i64| -> f64 { (k - m..=k + m).map(|i| energy_at(energies, i, boundary)).sum() };
    let mut sum = 0.0;
    for k in 0..n as i64 {
        // Running sum, re-anchored periodically so rounding never accumulates.
        if k as usize % RESUM_INTERVAL == 0 {
            sum = exact(k);
        } else {
            sum += energy_at(energies, k + m, boundary) - energy_at(energies, k - m - 1, boundary);
        }
        out.push(sum.max(0.0));
    }
    out
}

/// Per-symbol noise variance, without sampling any noise.
pub fn noise_variance_profile(block: &SymbolBlock, model: &ChannelModel) -> Vec<f64> {
    let n = block.len();
    match model.kind {
        ChannelKind::Awgn => vec![model.noise.p_ase; n],
        ChannelKind::Gn { power } => vec![model.noise.gn_variance(power); n],
        ChannelKind::FiniteMemoryGn { memory } => {
            window_energies(&block.energies(), memory, block.boundary)
                .into_iter()
                .map(|a| model.noise.rho(a, memory))
                .collect()
        }
    }
}

/// Adds circularly symmetric Gaussian noise with standard deviation `sqrt(variances[k])`;
/// the noise at index `k` is a pure function of `(seed, k)`.
pub fn add_noise(symbols: &[Complex64], variances: &[f64], seed: u64) -> Vec<Complex64> {
    let rng = CounterRng::new(seed);
    symbols
        .iter()
        .zip(variances)
        .enumerate()
        .map(|(k, (&x, &var))| {
            if var == 0.0 {
                x
            } else {
                x + rng.complex_normal(k as u64) * var.sqrt()
            }
        })
        .collect()
}

/// Sends `block` through `model`: `Y_k = x_k + Z_k`, `Z_k ~ CN(0, sigma_k^2)`.
pub fn transmit(block: &SymbolBlock, model: &ChannelModel, seed: u64) -> SymbolBlock {
    let variances = noise_variance_profile(block, model);
    SymbolBlock {
        symbols: add_noise(&block.symbols, &variances, seed),
        boundary: block.boundary,
    }
}
