//! Experiment runners. Each returns canonically sorted rows; traces go to a separate
//! file when one is configured.

use crate::config::{DetectorChoice, Experiment, ExperimentConfig, Memory};
use crate::error::{schema, CliError, Result};
use crate::output::{Row, SweepResult};
use gnlab::analytic::{ber_16qam, ber_ser_limit, ser_16qam, ErrorRateLimit};
use gnlab::capacity::{
    capacity_awgn, capacity_gn, capacity_gn_peak, monotone_envelope, optimize_lb, QuadratureConfig, SearchConfig,
    SearchGrid,
};
use gnlab::channel::ChannelModel;
use gnlab::modem::{Constellation, DetectorKind};
use gnlab::montecarlo::{run_paired, SimPlan, StopRule};
use gnlab::params::{eta_single_channel, memory_estimate};
use gnlab::waveform::{nonstationary_qpsk_experiment, pulse_broadening};
use gnlab::{NoiseParams, PowerDbm};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

struct RowFactory {
    seed: u64,
    hash: String,
}

impl RowFactory {
    fn row(&self, p_dbm: Option<f64>, n: impl ToString, metric: &str, value: f64, std_error: Option<f64>) -> Row {
        Row {
            p_dbm,
            n: n.to_string(),
            metric: metric.to_string(),
            value,
            std_error,
            seed: self.seed,
            config_hash: self.hash.clone(),
        }
    }
}

/// Resolves and validates `config`, then runs it. Writes the trace file if one is set,
/// but never the main output (see [`execute`]).
pub fn run(config: &ExperimentConfig) -> Result<SweepResult> {
    let config = config.clone().resolved()?;
    let f = RowFactory {
        seed: config.engine.seed,
        hash: config.hash(),
    };
    let rows = match config.experiment()? {
        Experiment::ParamsReport {} => params_report(&config, &f)?,
        Experiment::BerSerSweep {} => ber_ser_sweep(&config, &f)?,
        Experiment::SimSweep { detector } => sim_sweep(&config, *detector, &f)?,
        Experiment::CapacitySweep { grid, envelope } => {
            capacity_sweep(&config, grid.as_ref().expect("resolved"), *envelope, &f)?
        }
        Experiment::GnCapacity {} => gn_capacity(&config, &f)?,
        Experiment::WaveformPulse { pulse } => {
            let out = pulse_broadening(&config.system, pulse)?;
            if let Some(path) = &config.output.trace {
                let dt_ps = out.received.dt() * 1e12;
                let mut text = String::from("t_ps,tx_intensity_w,rx_intensity_w\n");
                let half = out.received.len() as f64 / 2.0;
                for (k, (a, b)) in out.transmitted.intensity().iter().zip(out.received.intensity()).enumerate() {
                    let _ = writeln!(text, "{:?},{a:?},{b:?}", (k as f64 - half) * dt_ps);
                }
                write_text(path, &text)?;
            }
            vec![
                f.row(None, "", "half_width_slots", out.half_width_slots, None),
                f.row(None, "", "transmitted_half_width_slots", out.transmitted_half_width_slots, None),
            ]
        }
        Experiment::WaveformNonstationary { blocks } => {
            let out = nonstationary_qpsk_experiment(&config.system, blocks, config.engine.seed)?;
            if let Some(path) = &config.output.trace {
                let mut text = String::from(
                    "symbol,high,tx_re,tx_im,nlse_re,nlse_im,finite_memory_re,finite_memory_im,gn_re,gn_im,finite_memory_variance\n",
                );
                for k in 0..out.transmitted.len() {
                    let (x, a, b, c) = (out.transmitted[k], out.nlse[k], out.finite_memory[k], out.gn[k]);
                    let _ = writeln!(
                        text,
                        "{k},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                        out.high_block[k] as u8,
                        x.re,
                        x.im,
                        a.re,
                        a.im,
                        b.re,
                        b.im,
                        c.re,
                        c.im,
                        out.finite_memory_variance[k]
                    );
                }
                write_text(path, &text)?;
            }
            let n = out.memory;
            vec![
                f.row(None, n, "nlse_variance_ratio", out.nlse_variance_ratio(), None),
                f.row(None, n, "finite_memory_variance_ratio", out.finite_memory_variance_ratio(), None),
                f.row(None, n, "gn_variance_ratio", out.gn_variance_ratio(), None),
                f.row(None, n, "profile_correlation", out.profile_correlation(), None),
            ]
        }
    };
    Ok(SweepResult::new(rows))
}

/// [`run`] followed by writing the result to `output.path` (when set).
pub fn execute(config: &ExperimentConfig) -> Result<SweepResult> {
    let result = run(config)?;
    if let Some(path) = &config.output.path {
        result.write(path, config.output.format)?;
    }
    Ok(result)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn grid(config: &ExperimentConfig) -> Result<Vec<(f64, Memory)>> {
    let powers = config.powers_dbm()?;
    Ok(config
        .memories()
        .into_iter()
        .flat_map(|m| powers.iter().map(move |&p| (p, m)))
        .collect())
}

fn params_report(config: &ExperimentConfig, f: &RowFactory) -> Result<Vec<Row>> {
    let s = &config.system;
    Ok(vec![
        f.row(None, "", "eta", eta_single_channel(s, false)?, None),
        f.row(None, "", "eta_dual", eta_single_channel(s, true)?, None),
        f.row(None, "", "memory_estimate", memory_estimate(s)?, None),
    ])
}

fn ber_ser_sweep(config: &ExperimentConfig, f: &RowFactory) -> Result<Vec<Row>> {
    let noise = config.system.noise();
    let points = grid(config)?;
    let rows = points
        .par_iter()
        .flat_map_iter(|&(dbm, m)| {
            let p = PowerDbm(dbm).watts();
            let (ber, ser) = match m {
                Memory::Finite(n) => (ber_16qam(p, n, &noise), ser_16qam(p, n, &noise)),
                Memory::Infinite => ber_ser_limit(p, &noise, ErrorRateLimit::GnModel),
                Memory::Awgn => ber_ser_limit(p, &noise, ErrorRateLimit::Awgn),
            };
            [f.row(Some(dbm), m, "ber", ber, None), f.row(Some(dbm), m, "ser", ser, None)]
        })
        .collect();
    Ok(rows)
}

fn channel_for(m: Memory, power: f64, noise: NoiseParams) -> ChannelModel {
    match m {
        Memory::Finite(n) => ChannelModel::finite_memory(n, noise),
        Memory::Infinite => ChannelModel::gn(power, noise),
        Memory::Awgn => ChannelModel::awgn(noise.p_ase),
    }
}

fn sim_sweep(config: &ExperimentConfig, choice: DetectorChoice, f: &RowFactory) -> Result<Vec<Row>> {
    let noise = config.system.noise();
    let e = &config.engine;
    let mut rows = Vec::new();
    for (dbm, m) in grid(config)? {
        let p = PowerDbm(dbm).watts();
        let genie = match m {
            Memory::Finite(memory) => Some(DetectorKind::GenieMl { memory, noise }),
            _ => None,
        };
        let detectors: Vec<(DetectorKind, &str)> = match (choice, genie) {
            (DetectorChoice::Med, _) => vec![(DetectorKind::Med, "")],
            (DetectorChoice::GenieMl, Some(g)) => vec![(g, "_genie_ml")],
            (DetectorChoice::Both, Some(g)) => vec![(DetectorKind::Med, ""), (g, "_genie_ml")],
            (_, None) => return Err(schema(format!("the genie-ML detector needs a finite memory, got N = {m}"))),
        };
        let stop_rule = match e.min_errors {
            Some(errors) => StopRule::MinErrors { errors },
            None => StopRule::FixedCount,
        };
        let plan = SimPlan::new(
            Constellation::qam16_with_power(p),
            channel_for(m, p, noise),
            e.symbols_per_trial,
            e.trials,
            e.seed,
        )
        .with_stop_rule(stop_rule)
        .with_discard_edges(e.discard_edges);
        let kinds: Vec<DetectorKind> = detectors.iter().map(|d| d.0).collect();
        let counts = run_paired(&plan, &kinds)?;
        for ((_, suffix), c) in detectors.iter().zip(&counts) {
            rows.push(f.row(Some(dbm), m, &format!("ber{suffix}"), c.ber(), Some(c.ber_std_error())));
            rows.push(f.row(Some(dbm), m, &format!("ser{suffix}"), c.ser(), Some(c.ser_std_error())));
            rows.push(f.row(Some(dbm), m, &format!("symbols{suffix}"), c.symbols as f64, None));
        }
    }
    Ok(rows)
}

fn capacity_sweep(config: &ExperimentConfig, search: &SearchGrid, envelope: bool, f: &RowFactory) -> Result<Vec<Row>> {
    let noise = config.system.noise();
    let e = &config.engine;
    let cfg = SearchConfig {
        mc_samples: e.mc_samples,
        search_samples: e.search_samples,
        quadrature: QuadratureConfig {
            nodes: e.quadrature_nodes,
            tolerance: e.quadrature_tolerance,
            probes: e.quadrature_probes,
            max_nodes: e.quadrature_max_nodes,
        },
    };
    let powers = config.powers_dbm()?;
    let mut rows = Vec::new();
    for m in config.memories() {
        let mut curve = Vec::with_capacity(powers.len());
        for &dbm in &powers {
            let p = PowerDbm(dbm).watts();
            let (value, se) = match m {
                Memory::Finite(n) => {
                    let b = optimize_lb(p, n, &noise, search, &cfg, e.seed)?;
                    rows.push(f.row(Some(dbm), m, "nu_opt", b.nu, None));
                    rows.push(f.row(Some(dbm), m, "ratio_opt", b.ratio, None));
                    (b.estimate.value, Some(b.estimate.std_error))
                }
                Memory::Infinite => (capacity_gn(p, &noise)?, None),
                Memory::Awgn => (capacity_awgn(p, noise.p_ase)?, None),
            };
            rows.push(f.row(Some(dbm), m, "capacity_lb", value, se));
            curve.push((dbm, value));
        }
        if envelope {
            let mut sorted = curve.clone();
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (dbm, v) in monotone_envelope(&sorted)? {
                rows.push(f.row(Some(dbm), m, "capacity_lb_envelope", v, None));
            }
        }
    }
    Ok(rows)
}

fn gn_capacity(config: &ExperimentConfig, f: &RowFactory) -> Result<Vec<Row>> {
    let noise = config.system.noise();
    let mut rows = Vec::new();
    for dbm in config.powers_dbm()? {
        let p = PowerDbm(dbm).watts();
        rows.push(f.row(Some(dbm), "inf", "capacity_gn", capacity_gn(p, &noise)?, None));
        rows.push(f.row(Some(dbm), "awgn", "capacity_awgn", capacity_awgn(p, noise.p_ase)?, None));
    }
    // no interior peak on a linear link
    if noise.eta > 0.0 {
        let (p_star, c_star) = capacity_gn_peak(&noise)?;
        rows.push(f.row(None, "inf", "peak_power_dbm", PowerDbm::from_watts(p_star).dbm(), None));
        rows.push(f.row(None, "inf", "peak_capacity_gn", c_star, None));
    }
    Ok(rows)
}
