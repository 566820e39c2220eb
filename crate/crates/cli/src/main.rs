use clap::{Args, Parser, Subcommand};
use gnlab_cli::compare::{compare, Tolerance};
use gnlab_cli::config::{ExperimentConfig, ExperimentKind, Format};
use gnlab_cli::{execute, CliError, Result, SweepResult};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gnlab", version, about = "Finite-memory GN-model fiber channel experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML experiment config; defaults of the subcommand apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Result file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Overrides `engine.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// NLI coefficient and memory estimate of the configured link.
    Params,
    /// Closed-form 16-QAM BER/SER sweep.
    BerSer,
    /// Monte Carlo 16-QAM BER/SER sweep.
    Simulate,
    /// Optimized capacity lower bound sweep.
    CapacityLb,
    /// GN-model and AWGN capacity versus power.
    GnCapacity,
    /// Split-step waveform experiments.
    Waveform {
        #[command(subcommand)]
        which: WaveformCommand,
        /// Per-sample or per-symbol trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compares two result files row by row.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        abs_tol: f64,
        #[arg(long, default_value_t = 0.0)]
        rel_tol: f64,
        /// Allowance in combined standard errors.
        #[arg(long, default_value_t = 3.0)]
        sigma: f64,
    },
}

#[derive(Subcommand, Clone, Copy)]
enum WaveformCommand {
    /// Single-pulse broadening.
    Pulse,
    /// Alternating-power QPSK blocks through NLSE and channel models.
    Nonstationary,
}

fn load(global: &Global, kind: ExperimentKind, trace: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut config = match &global.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::for_kind(kind),
    };
    match &config.experiment {
        None => config.experiment = ExperimentConfig::for_kind(kind).experiment,
        Some(e) if e.kind() != kind => {
            return Err(CliError::Schema(format!(
                "config describes a {} experiment, not {kind}",
                e.kind()
            )))
        }
        Some(_) => {}
    }
    if let Some(seed) = global.seed {
        config.engine.seed = seed;
    }
    if let Some(out) = &global.out {
        config.output.path = Some(out.clone());
    }
    if let Some(format) = global.format {
        config.output.format = format;
    }
    if trace.is_some() {
        config.output.trace = trace;
    }
    Ok(config)
}

fn real_main(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.global.threads {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let (kind, trace) = match cli.command {
        Command::Params => (ExperimentKind::ParamsReport, None),
        Command::BerSer => (ExperimentKind::BerSerSweep, None),
        Command::Simulate => (ExperimentKind::SimSweep, None),
        Command::CapacityLb => (ExperimentKind::CapacitySweep, None),
        Command::GnCapacity => (ExperimentKind::GnCapacity, None),
        Command::Waveform { which, trace } => (
            match which {
                WaveformCommand::Pulse => ExperimentKind::WaveformPulse,
                WaveformCommand::Nonstationary => ExperimentKind::WaveformNonstationary,
            },
            trace,
        ),
        Command::Compare {
            a,
            b,
            abs_tol,
            rel_tol,
            sigma,
        } => {
            let tol = Tolerance {
                abs: abs_tol,
                rel: rel_tol,
                sigma,
            };
            let report = compare(&SweepResult::read(&a)?, &SweepResult::read(&b)?, &tol)?;
            print!("{}", report.render());
            return Ok(report.pass());
        }
    };
    let config = load(&cli.global, kind, trace)?;
    let result = execute(&config)?;
    if config.output.path.is_none() {
        print!("{}", result.render(config.output.format)?);
    }
    Ok(true)
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("gnlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
