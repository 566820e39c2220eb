//! Capacity of the linear and GN channels and an achievable-rate lower bound for
//! the finite-memory GN model.
//!
//! The bound uses blocks of `2N+1` symbols: `2N` of constant amplitude `r1` around
//! one symbol whose radius follows a bivariate t-law, all phases uniform. Every
//! output window then sees the same noise variance `rho(2N r1² + R²)`, and with
//! `U_k = |Y_k|²`
//!
//! `C >= h(U)/(2N+1) - E[log2(e rho(2N r1² + R²))]`.
//!
//! `h(U)` is estimated by sampling `U` exactly and averaging `-log2 f_U(U)`, where
//! `f_U` is a one-dimensional mixture over the radius evaluated by quadrature.

use crate::error::{invalid, Error, Result};
use crate::montecarlo::estimate_entropy_term;
use crate::params::NoiseParams;
use crate::special::{log_bessel_i0, log_sum_exp, GaussLegendre};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// `log2(1 + P/P_ASE)`.
pub fn capacity_awgn(power: f64, p_ase: f64) -> Result<f64> {
    if !(p_ase > 0.0) {
        return Err(invalid("p_ase", "must be positive"));
    }
    Ok((power / p_ase).ln_1p() / LN_2)
}

/// `log2(1 + P/(P_ASE + eta P³))`.
pub fn capacity_gn(power: f64, noise: &NoiseParams) -> Result<f64> {
    if !(noise.p_ase > 0.0) {
        return Err(invalid("p_ase", "must be positive"));
    }
    Ok((power / noise.gn_variance(power)).ln_1p() / LN_2)
}

/// Location `(P_ASE/(2 eta))^(1/3)` and value of the GN-capacity maximum.
pub fn capacity_gn_peak(noise: &NoiseParams) -> Result<(f64, f64)> {
    if !(noise.eta > 0.0) {
        return Err(invalid("eta", "GN capacity has no interior peak without NLI"));
    }
    let p = (noise.p_ase / (2.0 * noise.eta)).cbrt();
    Ok((p, capacity_gn(p, noise)?))
}

/// Block input: `2N` constant-amplitude symbols and one bivariate-t symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TDistInput {
    pub nu: f64,
    /// Scale `s` of the t-law (W).
    pub s: f64,
    /// Constant amplitude `r1` (√W); unused when `memory == 0`.
    pub r1: f64,
    pub memory: usize,
}

impl TDistInput {
    pub fn new(nu: f64, s: f64, r1: f64, memory: usize) -> Result<Self> {
        let input = Self { nu, s, r1, memory };
        input.validate()?;
        Ok(input)
    }

    /// Solves the power constraint for `s`, given `nu` and `ratio = r1²/s`.
    pub fn from_power(power: f64, memory: usize, nu: f64, ratio: f64) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(invalid("power", "must be positive and finite"));
        }
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(invalid("nu", "must exceed 2 for a finite second moment"));
        }
        if !(ratio >= 0.0) || !ratio.is_finite() {
            return Err(invalid("ratio", "r1²/s must be non-negative and finite"));
        }
        let n2 = 2.0 * memory as f64;
        let ratio = if memory == 0 { 0.0 } else { ratio };
        let s = power * (n2 + 1.0) / (n2 * ratio + 2.0 * nu / (nu - 2.0));
        Self::new(nu, s, (ratio * s).sqrt(), memory)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 2.0) || !self.nu.is_finite() {
            return Err(invalid("nu", "must exceed 2 for a finite second moment"));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(invalid("s", "must be positive and finite"));
        }
        if !(self.r1 >= 0.0) || !self.r1.is_finite() {
            return Err(invalid("r1", "must be non-negative and finite"));
        }
        Ok(())
    }

    /// `E[R²] = 2 nu s / (nu - 2)`.
    pub fn second_moment(&self) -> f64 {
        2.0 * self.nu * self.s / (self.nu - 2.0)
    }

    fn constant_energy(&self) -> f64 {
        2.0 * self.memory as f64 * self.r1 * self.r1
    }

    /// Average power of a block.
    pub fn power(&self) -> f64 {
        (self.constant_energy() + self.second_moment()) / (2 * self.memory + 1) as f64
    }

    pub fn check_power(&self, power: f64) -> Result<()> {
        let actual = self.power();
        if (actual - power).abs() > 1e-9 * power.abs() {
            return Err(Error::PowerConstraint { actual, target: power });
        }
        Ok(())
    }

    /// `F(r) = 1 - (1 + r²/(nu s))^(-nu/2)`.
    pub fn cdf(&self, r: f64) -> f64 {
        -(-0.5 * self.nu * (r * r / (self.nu * self.s)).ln_1p()).exp_m1()
    }

    /// `1 - F(r)`, accurate in the far tail.
    pub fn survival(&self, r: f64) -> f64 {
        (-0.5 * self.nu * (r * r / (self.nu * self.s)).ln_1p()).exp()
    }

    /// Radius with `F(r) = p`: `r² = nu s ((1-p)^(-2/nu) - 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        let u = self.nu * self.s * (-2.0 / self.nu * (-p).ln_1p()).exp_m1();
        u.max(0.0).sqrt()
    }

    /// Radius with `1 - F(r) = q`.
    pub fn survival_quantile(&self, q: f64) -> f64 {
        let u = self.nu * self.s * (-2.0 / self.nu * q.ln()).exp_m1();
        u.max(0.0).sqrt()
    }

    /// `f_R(r) = (r/s) (1 + r²/(nu s))^(-(1 + nu/2))`.
    pub fn radius_density(&self, r: f64) -> f64 {
        r / self.s * (-(1.0 + 0.5 * self.nu) * (r * r / (self.nu * self.s)).ln_1p()).exp()
    }

    /// One radius by inverse-CDF sampling.
    pub fn sample_radius(&self, rng: &mut impl Rng) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

/// Noise variance seen by every symbol of a block whose variable symbol has radius `r`.
#[inline]
fn block_variance(input: &TDistInput, noise: &NoiseParams, r: f64) -> f64 {
    noise.rho(input.constant_energy() + r * r, input.memory)
}

/// `ln f_{U|R}(u | r)`: product of scaled noncentral chi-square densities with two
/// degrees of freedom. `u` holds `U_{-N..=N}` with the variable symbol at index `N`.
pub fn log_density_given_radius(u: &[f64], r: f64, input: &TDistInput, noise: &NoiseParams) -> f64 {
    let sqrt_u: Vec<f64> = u.iter().map(|v| v.sqrt()).collect();
    let sum_u: f64 = u.iter().sum();
    Conditional::new(&sqrt_u, sum_u, input, noise).log_g(r)
}

struct Conditional<'a> {
    sqrt_u: &'a [f64],
    sum_u: f64,
    input: &'a TDistInput,
    noise: &'a NoiseParams,
}

impl<'a> Conditional<'a> {
    fn new(sqrt_u: &'a [f64], sum_u: f64, input: &'a TDistInput, noise: &'a NoiseParams) -> Self {
        Self {
            sqrt_u,
            sum_u,
            input,
            noise,
        }
    }

    fn log_g(&self, r: f64) -> f64 {
        let n = self.input.memory;
        let sigma2 = block_variance(self.input, self.noise, r);
        let inv = 1.0 / sigma2;
        let mut v = -(self.sum_u + self.input.constant_energy() + r * r) * inv
            - (2 * n + 1) as f64 * sigma2.ln()
            + log_bessel_i0(2.0 * r * self.sqrt_u[n] * inv);
        if self.input.r1 > 0.0 {
            let scale = 2.0 * self.input.r1 * inv;
            for (k, su) in self.sqrt_u.iter().enumerate() {
                if k != n {
                    v += log_bessel_i0(scale * su);
                }
            }
        }
        v
    }
}

// Half-width, in noise standard deviations, of the radius windows used as panel breaks.
const WINDOW_SIGMAS: f64 = 8.0;
const MAX_PANELS: usize = 8;

fn solve_radius_for_variance(input: &TDistInput, noise: &NoiseParams, target: f64) -> Option<f64> {
    if !(noise.eta > 0.0) || target <= noise.p_ase {
        return None;
    }
    let a = (2 * input.memory + 1) as f64 * ((target - noise.p_ase) / noise.eta).cbrt();
    let r2 = a - input.constant_energy();
    (r2 > 0.0).then(|| r2.sqrt())
}

// Radius break points that bracket where f_{U|R}(u|r) is concentrated: around
// sqrt(u_0), and, when the constant-amplitude outputs pin the noise variance,
// around the radius that produces that variance.
fn break_points(sqrt_u: &[f64], input: &TDistInput, noise: &NoiseParams) -> Vec<f64> {
    let n = input.memory;
    let mut points = Vec::with_capacity(8);
    let m0 = sqrt_u[n];
    let w0 = WINDOW_SIGMAS * (0.5 * block_variance(input, noise, m0)).sqrt();
    points.extend([m0 - w0, m0, m0 + w0]);
    if n > 0 && noise.eta > 0.0 {
        let mean_u = sqrt_u
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != n)
            .map(|(_, s)| s * s)
            .sum::<f64>()
            / (2 * n) as f64;
        let centre = (mean_u - input.r1 * input.r1).max(noise.p_ase);
        let spread = WINDOW_SIGMAS / (2.0 * n as f64).sqrt();
        for factor in [1.0 / (1.0 + spread), 1.0, 1.0 + spread] {
            if let Some(r) = solve_radius_for_variance(input, noise, centre * factor) {
                points.push(r);
            }
        }
    }
    points.push(input.median());
    points.retain(|p| *p > 0.0 && p.is_finite());
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}

/// Weighted radius nodes `(ln w, r)` such that `sum_j w_j h(r_j) ≈ E[h(R)]` for
/// functions concentrated near the given break points.
fn mixture_nodes(input: &TDistInput, breaks: &[f64], rule: &GaussLegendre, out: &mut Vec<(f64, f64)>) {
    out.clear();
    let median = input.median();
    let mut edges = Vec::with_capacity(breaks.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(breaks);
    edges.push(f64::INFINITY);
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        if b <= median {
            // lower part: probability coordinate v = F(r)
            let (va, vb) = (input.cdf(a), input.cdf(b));
            let width = vb - va;
            if width <= 0.0 {
                continue;
            }
            for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                out.push(((w * width).ln(), input.quantile(va + width * x)));
            }
        } else {
            // upper part: survival coordinate q = 1 - F(r)
            let qa = input.survival(a);
            let qb = if b.is_infinite() { 0.0 } else { input.survival(b) };
            let width = qa - qb;
            if width <= 0.0 {
                continue;
            }
            for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
                let q = qb + width * x;
                if q > 0.0 {
                    out.push(((w * width).ln(), input.survival_quantile(q)));
                }
            }
        }
    }
}

/// Quadrature settings for [`log_density_u`] and the bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Total node budget, shared among up to eight panels.
    pub nodes: usize,
    /// Relative tolerance of the node-doubling check.
    pub tolerance: f64,
    /// Number of sampled points on which the doubling check runs.
    pub probes: usize,
    /// Ceiling for automatic refinement; `nodes` doubles until the check passes or this is hit.
    pub max_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes: 512,
            tolerance: 1e-6,
            probes: 4,
            max_nodes: 8192,
        }
    }
}

impl QuadratureConfig {
    fn panel_nodes(&self) -> usize {
        (self.nodes / MAX_PANELS).max(2)
    }

    fn with_nodes(&self, nodes: usize) -> Self {
        Self { nodes, ..*self }
    }
}

/// Reusable evaluator of `ln f_U`.
struct DensityEvaluator<'a> {
    input: &'a TDistInput,
    noise: &'a NoiseParams,
    rule: GaussLegendre,
}

impl<'a> DensityEvaluator<'a> {
    fn new(input: &'a TDistInput, noise: &'a NoiseParams, panel_nodes: usize) -> Self {
        Self {
            input,
            noise,
            rule: GaussLegendre::new(panel_nodes),
        }
    }

    fn ln_density(&self, u: &[f64], nodes: &mut Vec<(f64, f64)>, terms: &mut Vec<f64>) -> f64 {
        let sqrt_u: Vec<f64> = u.iter().map(|v| v.sqrt()).collect();
        let sum_u: f64 = u.iter().sum();
        let cond = Conditional::new(&sqrt_u, sum_u, self.input, self.noise);
        let breaks = break_points(&sqrt_u, self.input, self.noise);
        mixture_nodes(self.input, &breaks, &self.rule, nodes);
        terms.clear();
        terms.extend(nodes.iter().map(|&(lw, r)| lw + cond.log_g(r)));
        log_sum_exp(terms)
    }
}

fn check_u(u: &[f64], input: &TDistInput) -> Result<()> {
    if u.len() != 2 * input.memory + 1 {
        return Err(invalid("u", format!("expected {} components", 2 * input.memory + 1)));
    }
    if u.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid("u", "components must be finite and non-negative"));
    }
    Ok(())
}

/// `log2 f_U(u)` with `nodes` total quadrature nodes.
pub fn log_density_u(u: &[f64], input: &TDistInput, noise: &NoiseParams, nodes: usize) -> Result<f64> {
    input.validate()?;
    check_u(u, input)?;
    if nodes < 16 {
        return Err(invalid("nodes", "need at least 16 quadrature nodes"));
    }
    let eval = DensityEvaluator::new(input, noise, nodes / MAX_PANELS);
    Ok(eval.ln_density(u, &mut Vec::new(), &mut Vec::new()) / LN_2)
}

/// As [`log_density_u`], failing when doubling the node count moves the value by more
/// than `tolerance * max(1, |value|)`.
pub fn log_density_u_checked(
    u: &[f64],
    input: &TDistInput,
    noise: &NoiseParams,
    config: &QuadratureConfig,
) -> Result<f64> {
    let coarse = log_density_u(u, input, noise, config.nodes)?;
    let fine = log_density_u(u, input, noise, 2 * config.nodes)?;
    let change = (fine - coarse).abs();
    if change > config.tolerance * coarse.abs().max(1.0) {
        return Err(Error::QuadratureNonConvergence {
            nodes: config.nodes,
            doubled: 2 * config.nodes,
            change,
            tolerance: config.tolerance,
        });
    }
    Ok(coarse)
}

/// Draws one output vector `U` for the block input.
pub fn sample_block_energies(input: &TDistInput, noise: &NoiseParams, rng: &mut impl Rng) -> Vec<f64> {
    let n = input.memory;
    let r = input.sample_radius(rng);
    let sd = (0.5 * block_variance(input, noise, r)).sqrt();
    (0..2 * n + 1)
        .map(|k| {
            let amp = if k == n { r } else { input.r1 };
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            let rad = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (2.0 * PI * u2).sin_cos();
            let re = amp + sd * rad * c;
            let im = sd * rad * s;
            re * re + im * im
        })
        .collect()
}

// Lower half in v = F(r); upper half in q = 1 - F(r) with q = y⁴/2, which tames the
// logarithmic growth of ln rho in the far tail.
fn noise_term_with(input: &TDistInput, noise: &NoiseParams, rule: &GaussLegendre) -> f64 {
    let h = |r: f64| (std::f64::consts::E * block_variance(input, noise, r)).log2();
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (&x, &w) in rule.nodes().iter().zip(rule.weights()) {
        lower += w * h(input.quantile(0.5 * x));
        let q = 0.5 * x.powi(4);
        upper += w * 2.0 * x.powi(3) * h(input.survival_quantile(q));
    }
    0.5 * lower + upper
}

/// `E[log2(e rho(2N r1² + R²))]`, node-doubling checked.
pub fn noise_entropy_term(input: &TDistInput, noise: &NoiseParams, config: &QuadratureConfig) -> Result<f64> {
    input.validate()?;
    let coarse = noise_term_with(input, noise, &GaussLegendre::new(config.nodes));
    let fine = noise_term_with(input, noise, &GaussLegendre::new(2 * config.nodes));
    let change = (fine - coarse).abs();
    if change > config.tolerance * coarse.abs().max(1.0) {
        return Err(Error::QuadratureNonConvergence {
            nodes: config.nodes,
            doubled: 2 * config.nodes,
            change,
            tolerance: config.tolerance,
        });
    }
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    /// Bit/symbol.
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub quadrature_nodes: usize,
    /// `h(U)/(2N+1)`.
    pub output_entropy_rate: f64,
    /// `E[log2(e rho)]`.
    pub noise_entropy: f64,
}

impl BoundEstimate {
    /// A negative bound is valid but carries no information.
    pub fn is_negative(&self) -> bool {
        self.value < 0.0
    }
}

// Doubles the node count until the noise term and every probe sample pass the doubling
// check. The last failure is returned once `max_nodes` is reached.
fn refine_quadrature(
    input: &TDistInput,
    noise: &NoiseParams,
    seed: u64,
    base: &QuadratureConfig,
) -> Result<(QuadratureConfig, f64)> {
    let mut probe_rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(crate::rng::derive_seed(seed, "probe", 0));
    let probes: Vec<Vec<f64>> = (0..base.probes)
        .map(|_| sample_block_energies(input, noise, &mut probe_rng))
        .collect();
    let mut config = *base;
    loop {
        let attempt = noise_entropy_term(input, noise, &config).and_then(|h| {
            for u in &probes {
                log_density_u_checked(u, input, noise, &config)?;
            }
            Ok(h)
        });
        match attempt {
            Ok(h) => return Ok((config, h)),
            Err(Error::QuadratureNonConvergence { .. }) if 2 * config.nodes <= base.max_nodes => {
                config = config.with_nodes(2 * config.nodes);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Monte Carlo evaluation of the lower bound. The input must meet the power constraint.
pub fn capacity_lb(
    power: f64,
    noise: &NoiseParams,
    input: &TDistInput,
    mc_samples: usize,
    seed: u64,
    quadrature: &QuadratureConfig,
) -> Result<BoundEstimate> {
    input.validate()?;
    input.check_power(power)?;
    if quadrature.nodes < 16 {
        return Err(invalid("quadrature.nodes", "need at least 16 quadrature nodes"));
    }
    let (quadrature, noise_entropy) = refine_quadrature(input, noise, seed, quadrature)?;
    let quadrature = &quadrature;

    let eval = DensityEvaluator::new(input, noise, quadrature.panel_nodes());
    let entropy = estimate_entropy_term(
        |rng| sample_block_energies(input, noise, rng),
        |u: &Vec<f64>| {
            thread_local! {
                static SCRATCH: std::cell::RefCell<(Vec<(f64, f64)>, Vec<f64>)> = Default::default();
            }
            Ok(SCRATCH.with(|s| {
                let (nodes, terms) = &mut *s.borrow_mut();
                eval.ln_density(u, nodes, terms)
            }))
        },
        mc_samples,
        seed,
    )?;
    let block = (2 * input.memory + 1) as f64;
    let output_entropy_rate = entropy.mean / block;
    Ok(BoundEstimate {
        value: output_entropy_rate - noise_entropy,
        std_error: entropy.std_error / block,
        samples: mc_samples,
        quadrature_nodes: quadrature.nodes,
        output_entropy_rate,
        noise_entropy,
    })
}

/// Candidate values of `nu` and `r1²/s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchGrid {
    pub nu: Vec<f64>,
    pub ratio: Vec<f64>,
}

/// `n` log-spaced values on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            // log-spaced in nu - 2: the optimum approaches 2 at high power
            nu: log_space(0.005, 98.0, 14).into_iter().map(|x| 2.0 + x).collect(),
            ratio: log_space(1e-3, 1e3, 13),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Samples for the final estimate at the selected grid point.
    pub mc_samples: usize,
    /// Samples per grid point during the search; the search is skipped
    /// (all points evaluated with `mc_samples`) when this is not smaller.
    pub search_samples: usize,
    pub quadrature: QuadratureConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            mc_samples: 100_000,
            search_samples: 2_000,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub nu: f64,
    pub ratio: f64,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedBound {
    pub input: TDistInput,
    pub nu: f64,
    pub ratio: f64,
    pub estimate: BoundEstimate,
    /// Grid points rejected by the power constraint.
    pub skipped: usize,
    /// Search-stage estimates of every feasible point.
    pub evaluated: Vec<GridPoint>,
}

/// Grid search for the best `(nu, r1²/s)`. All grid points share the same random
/// numbers, so their differences are not blurred by independent sampling noise.
pub fn optimize_lb(
    power: f64,
    memory: usize,
    noise: &NoiseParams,
    grid: &SearchGrid,
    config: &SearchConfig,
    seed: u64,
) -> Result<OptimizedBound> {
    if grid.nu.is_empty() || grid.ratio.is_empty() {
        return Err(Error::Empty("search grid"));
    }
    let search_samples = config.search_samples.min(config.mc_samples);
    // With no constant-amplitude symbols the ratio axis is irrelevant.
    let ratios: &[f64] = if memory == 0 { &grid.ratio[..1] } else { &grid.ratio };
    let mut skipped = 0;
    let mut evaluated = Vec::new();
    let mut best: Option<(TDistInput, f64, f64, BoundEstimate)> = None;
    for &nu in &grid.nu {
        for &ratio in ratios {
            let input = match TDistInput::from_power(power, memory, nu, ratio) {
                Ok(i) => i,
                Err(_) => {
                    skipped += 1;
                    continue;
                }
            };
            let est = capacity_lb(power, noise, &input, search_samples, seed, &config.quadrature)?;
            evaluated.push(GridPoint {
                nu,
                ratio,
                value: est.value,
                std_error: est.std_error,
            });
            if best.as_ref().is_none_or(|b| est.value > b.3.value) {
                best = Some((input, nu, ratio, est));
            }
        }
    }
    let (input, nu, ratio, coarse) = best.ok_or(Error::Empty("feasible grid points"))?;
    let estimate = if search_samples < config.mc_samples {
        capacity_lb(power, noise, &input, config.mc_samples, seed, &config.quadrature)?
    } else {
        coarse
    };
    Ok(OptimizedBound {
        input,
        nu,
        ratio,
        estimate,
        skipped,
        evaluated,
    })
}

/// Running maximum over increasing power.
pub fn monotone_envelope(curve: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(invalid("curve", "power values must be strictly increasing"));
    }
    let mut best = f64::NEG_INFINITY;
    Ok(curve
        .iter()
        .map(|&(p, c)| {
            best = best.max(c);
            (p, best)
        })
        .collect())
}
