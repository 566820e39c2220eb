//! Monte Carlo error-rate estimation and sample-mean entropy estimation.
//!
//! Each trial draws its symbols from `derive_seed(master, "symbols", t)` and its
//! noise from `derive_seed(master, "noise", t)`, so any trial can be replayed in
//! isolation and results never depend on the thread count.

use crate::channel::{noise_variance_profile, window_energies, ChannelKind, ChannelModel, SymbolBlock};
use crate::error::{invalid, Error, Result};
use crate::modem::{Constellation, DetectorKind};
use crate::rng::CounterRng;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Run every trial in the budget.
    #[default]
    FixedCount,
    /// Stop after the first trial at which at least `errors` symbol errors have been seen.
    MinErrors { errors: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPlan {
    pub constellation: Constellation,
    pub channel: ChannelModel,
    pub detector: DetectorKind,
    pub symbols_per_trial: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub stop_rule: StopRule,
    /// Leave the first and last `N` symbols of each trial out of the counts.
    pub discard_edges: bool,
}

impl SimPlan {
    pub fn new(constellation: Constellation, channel: ChannelModel, symbols_per_trial: usize, trials: usize, master_seed: u64) -> Self {
        Self {
            constellation,
            channel,
            detector: DetectorKind::Med,
            symbols_per_trial,
            trials,
            master_seed,
            stop_rule: StopRule::FixedCount,
            discard_edges: false,
        }
    }

    pub fn with_detector(mut self, detector: DetectorKind) -> Self {
        self.detector = detector;
        self
    }

    pub fn with_stop_rule(mut self, stop_rule: StopRule) -> Self {
        self.stop_rule = stop_rule;
        self
    }

    pub fn with_discard_edges(mut self, discard_edges: bool) -> Self {
        self.discard_edges = discard_edges;
        self
    }

    fn memory(&self) -> usize {
        self.channel.memory().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        validate_detector(&self.channel, &self.detector)?;
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        let n = self.memory();
        if self.symbols_per_trial < 2 * n + 1 {
            return Err(invalid("symbols_per_trial", format!("must be at least 2N+1 = {}", 2 * n + 1)));
        }
        if self.discard_edges && self.symbols_per_trial <= 2 * n {
            return Err(invalid("symbols_per_trial", "nothing left after discarding edges"));
        }
        Ok(())
    }
}

fn validate_detector(channel: &ChannelModel, detector: &DetectorKind) -> Result<()> {
    if let DetectorKind::GenieMl { memory, .. } = detector {
        match channel.kind {
            ChannelKind::FiniteMemoryGn { memory: m } if m == *memory => {}
            _ => {
                return Err(invalid(
                    "detector",
                    "genie ML needs a finite-memory channel with the same memory",
                ))
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub bits: u64,
    pub symbols: u64,
    pub trials_run: u64,
    /// Set when a `MinErrors` rule ran out of trials before reaching its target.
    pub budget_exhausted: bool,
}

/// `sqrt(p (1 - p) / n)`.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

impl ErrorCounts {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits as f64
    }

    pub fn ser(&self) -> f64 {
        self.symbol_errors as f64 / self.symbols as f64
    }

    pub fn ber_std_error(&self) -> f64 {
        binomial_sigma(self.ber(), self.bits)
    }

    pub fn ser_std_error(&self) -> f64 {
        binomial_sigma(self.ser(), self.symbols)
    }

    pub fn merge(&mut self, other: &ErrorCounts) {
        self.bit_errors += other.bit_errors;
        self.symbol_errors += other.symbol_errors;
        self.bits += other.bits;
        self.symbols += other.symbols;
        self.trials_run += other.trials_run;
    }
}

/// Uniform i.i.d. symbol indices for one trial.
pub fn trial_indices(constellation: &Constellation, len: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = constellation.len();
    (0..len).map(|_| rng.random_range(0..m)).collect()
}

fn run_trial(plan: &SimPlan, detectors: &[DetectorKind], trial: u64) -> Vec<ErrorCounts> {
    let c = &plan.constellation;
    let indices = trial_indices(c, plan.symbols_per_trial, derive_seed(plan.master_seed, "symbols", trial));
    let block = SymbolBlock::new(indices.iter().map(|&i| c.points()[i]).collect());
    let variances = noise_variance_profile(&block, &plan.channel);
    let noise = CounterRng::new(derive_seed(plan.master_seed, "noise", trial));
    let n = plan.memory();
    let window = match detectors.iter().any(|d| matches!(d, DetectorKind::GenieMl { .. })) {
        true => window_energies(&block.energies(), n, block.boundary),
        false => Vec::new(),
    };
    let (start, end) = if plan.discard_edges {
        (n, plan.symbols_per_trial - n)
    } else {
        (0, plan.symbols_per_trial)
    };
    let bits_per_symbol = c.bits_per_symbol() as u64;
    let mut out = vec![
        ErrorCounts {
            trials_run: 1,
            ..Default::default()
        };
        detectors.len()
    ];
    for k in start..end {
        let x: Complex64 = block.symbols[k];
        let var = variances[k];
        let y = if var == 0.0 { x } else { x + noise.complex_normal(k as u64) * var.sqrt() };
        for (det, counts) in detectors.iter().zip(out.iter_mut()) {
            let decided = match det {
                DetectorKind::Med => c.detect_med(y),
                DetectorKind::GenieMl { memory, noise } => {
                    c.detect_genie_ml(y, window[k] - x.norm_sqr(), *memory, noise)
                }
            };
            let sent = indices[k];
            if decided != sent {
                counts.symbol_errors += 1;
                counts.bit_errors += c.bit_distance(sent, decided) as u64;
            }
            counts.symbols += 1;
            counts.bits += bits_per_symbol;
        }
    }
    out
}

// Trials are evaluated in parallel batches and folded in trial order, so the stop
// point and the totals are the same for every thread count.
fn run_detectors(plan: &SimPlan, detectors: &[DetectorKind]) -> Result<Vec<ErrorCounts>> {
    plan.validate()?;
    for d in detectors {
        validate_detector(&plan.channel, d)?;
    }
    if detectors.is_empty() {
        return Err(Error::Empty("detector list"));
    }
    let batch = match plan.stop_rule {
        StopRule::FixedCount => plan.trials,
        StopRule::MinErrors { .. } => (4 * rayon::current_num_threads()).max(4),
    };
    let mut totals = vec![ErrorCounts::default(); detectors.len()];
    let mut next = 0usize;
    while next < plan.trials {
        let stop = (next + batch).min(plan.trials);
        let results: Vec<Vec<ErrorCounts>> = (next..stop)
            .into_par_iter()
            .map(|t| run_trial(plan, detectors, t as u64))
            .collect();
        for trial in results {
            for (total, c) in totals.iter_mut().zip(&trial) {
                total.merge(c);
            }
            if let StopRule::MinErrors { errors } = plan.stop_rule {
                if totals[0].symbol_errors >= errors {
                    return Ok(totals);
                }
            }
        }
        next = stop;
    }
    if let StopRule::MinErrors { errors } = plan.stop_rule {
        let short = totals[0].symbol_errors < errors;
        for t in &mut totals {
            t.budget_exhausted = short;
        }
    }
    Ok(totals)
}

/// Empirical BER and SER for `plan`.
pub fn run_ber_ser(plan: &SimPlan) -> Result<ErrorCounts> {
    Ok(run_detectors(plan, &[plan.detector])?[0])
}

/// Runs several detectors on identical symbol and noise realizations. A stop rule
/// is evaluated on the first detector.
pub fn run_paired(plan: &SimPlan, detectors: &[DetectorKind]) -> Result<Vec<ErrorCounts>> {
    run_detectors(plan, detectors)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    /// Sample mean of `-log2 f(U)`.
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

const ENTROPY_CHUNK: usize = 256;

/// Monte Carlo estimate of `E[-log2 f(U)]` with `U` drawn by `sampler` and `ln f`
/// given by `log_density`. Samples come in fixed chunks with derived seeds and the
/// chunk sums are combined in order, so the estimate is independent of threading.
pub fn estimate_entropy_term<T, S, D>(sampler: S, log_density: D, samples: usize, seed: u64) -> Result<EntropyEstimate>
where
    S: Fn(&mut ChaCha8Rng) -> T + Sync,
    D: Fn(&T) -> Result<f64> + Sync,
{
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    let chunks = samples.div_ceil(ENTROPY_CHUNK);
    let partial: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "entropy", chunk as u64));
            let len = ENTROPY_CHUNK.min(samples - chunk * ENTROPY_CHUNK);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..len {
                let u = sampler(&mut rng);
                let lf = log_density(&u)?;
                if !lf.is_finite() {
                    return Err(invalid("log_density", format!("non-finite value {lf} at a sampled point")));
                }
                let v = -lf / std::f64::consts::LN_2;
                sum += v;
                sum_sq += v * v;
            }
            Ok((sum, sum_sq))
        })
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for p in partial {
        let (s, q) = p?;
        sum += s;
        sum_sq += q;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(EntropyEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples,
    })
}
