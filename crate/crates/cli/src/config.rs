//! Experiment configuration. Every table rejects unknown keys; omitted tables and
//! keys fall back to the defaults of the chosen experiment.

use crate::error::{schema, CliError, Result};
use gnlab::capacity::SearchGrid;
use gnlab::waveform::{NonstationaryConfig, PulseBroadeningConfig};
use gnlab::SystemParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ParamsReport,
    BerSerSweep,
    SimSweep,
    CapacitySweep,
    GnCapacity,
    WaveformPulse,
    WaveformNonstationary,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    // empty braces so that stray keys are rejected
    ParamsReport {},
    BerSerSweep {},
    SimSweep {
        #[serde(default)]
        detector: DetectorChoice,
    },
    CapacitySweep {
        #[serde(default)]
        grid: Option<SearchGrid>,
        /// Also emit the running-maximum envelope of each bound curve.
        #[serde(default = "yes")]
        envelope: bool,
    },
    GnCapacity {},
    WaveformPulse {
        #[serde(default)]
        pulse: PulseBroadeningConfig,
    },
    WaveformNonstationary {
        #[serde(default)]
        blocks: NonstationaryConfig,
    },
}

fn yes() -> bool {
    true
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::ParamsReport {} => ExperimentKind::ParamsReport,
            Experiment::BerSerSweep {} => ExperimentKind::BerSerSweep,
            Experiment::SimSweep { .. } => ExperimentKind::SimSweep,
            Experiment::CapacitySweep { .. } => ExperimentKind::CapacitySweep,
            Experiment::GnCapacity {} => ExperimentKind::GnCapacity,
            Experiment::WaveformPulse { .. } => ExperimentKind::WaveformPulse,
            Experiment::WaveformNonstationary { .. } => ExperimentKind::WaveformNonstationary,
        }
    }

    pub fn default_for(kind: ExperimentKind) -> Self {
        match kind {
            ExperimentKind::ParamsReport => Experiment::ParamsReport {},
            ExperimentKind::BerSerSweep => Experiment::BerSerSweep {},
            ExperimentKind::SimSweep => Experiment::SimSweep {
                detector: DetectorChoice::default(),
            },
            ExperimentKind::CapacitySweep => Experiment::CapacitySweep {
                grid: None,
                envelope: true,
            },
            ExperimentKind::GnCapacity => Experiment::GnCapacity {},
            ExperimentKind::WaveformPulse => Experiment::WaveformPulse {
                pulse: PulseBroadeningConfig::default(),
            },
            ExperimentKind::WaveformNonstationary => Experiment::WaveformNonstationary {
                blocks: NonstationaryConfig::default(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorChoice {
    #[default]
    Med,
    GenieMl,
    /// Both detectors on the same realizations.
    Both,
}

/// One entry of the memory list: a finite `N`, the GN-model limit or the linear channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Memory {
    Finite(usize),
    Infinite,
    Awgn,
}

impl fmt::Display for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Memory::Finite(n) => write!(f, "{n}"),
            Memory::Infinite => f.write_str("inf"),
            Memory::Awgn => f.write_str("awgn"),
        }
    }
}

impl std::str::FromStr for Memory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "inf" => Ok(Memory::Infinite),
            "awgn" => Ok(Memory::Awgn),
            _ => s
                .parse::<usize>()
                .map(Memory::Finite)
                .map_err(|_| format!("memory must be a non-negative integer, \"inf\" or \"awgn\", got {s:?}")),
        }
    }
}

impl Serialize for Memory {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Memory::Finite(n) => s.serialize_u64(*n as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Memory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(n) => Ok(Memory::Finite(n as usize)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Power grid in dBm: an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PowerGrid {
    List(Vec<f64>),
    Range(PowerRange),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl PowerGrid {
    pub fn range(start: f64, stop: f64, step: f64) -> Self {
        PowerGrid::Range(PowerRange { start, stop, step })
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            PowerGrid::List(v) => v.clone(),
            PowerGrid::Range(r) => {
                if !(r.step > 0.0) || !(r.stop >= r.start) {
                    return Err(schema("power range needs step > 0 and stop >= start"));
                }
                let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize;
                // round to 1e-9 dB so that grids print cleanly
                (0..=n).map(|i| ((r.start + r.step * i as f64) * 1e9).round() / 1e9).collect()
            }
        };
        if v.is_empty() {
            return Err(schema("power grid is empty"));
        }
        if v.iter().any(|p| !p.is_finite()) {
            return Err(schema("power grid contains a non-finite value"));
        }
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(schema("power grid contains duplicate values"));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub power_dbm: Option<PowerGrid>,
    pub memory: Option<Vec<Memory>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub seed: u64,
    pub symbols_per_trial: usize,
    pub trials: usize,
    /// Stop a simulation point early after this many symbol errors.
    pub min_errors: Option<u64>,
    pub discard_edges: bool,
    pub mc_samples: usize,
    pub search_samples: usize,
    pub quadrature_nodes: usize,
    pub quadrature_tolerance: f64,
    pub quadrature_probes: usize,
    /// Upper limit for automatic node doubling.
    pub quadrature_max_nodes: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            symbols_per_trial: 100_000,
            trials: 100,
            min_errors: None,
            discard_edges: false,
            mc_samples: 100_000,
            search_samples: 2_000,
            quadrature_nodes: 512,
            quadrature_tolerance: 1e-6,
            quadrature_probes: 4,
            quadrature_max_nodes: 8192,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Per-sample or per-symbol traces of the waveform experiments.
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: SystemParams,
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| CliError::ConfigParse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    /// Config for `kind` with every default filled in.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        Self {
            experiment: Some(Experiment::default_for(kind)),
            ..Default::default()
        }
        .resolved()
        .expect("defaults are valid")
    }

    pub fn experiment(&self) -> Result<&Experiment> {
        self.experiment.as_ref().ok_or_else(|| schema("no [experiment] table"))
    }

    /// Fills the sweep defaults of the experiment kind and validates.
    pub fn resolved(mut self) -> Result<Self> {
        let kind = self.experiment()?.kind();
        let (power, memory) = default_sweep(kind);
        if self.sweep.power_dbm.is_none() {
            self.sweep.power_dbm = power;
        }
        if self.sweep.memory.is_none() {
            self.sweep.memory = memory;
        }
        if let Some(Experiment::CapacitySweep { grid, .. }) = &mut self.experiment {
            grid.get_or_insert_with(SearchGrid::default);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let kind = self.experiment()?.kind();
        let needs_power = matches!(
            kind,
            ExperimentKind::BerSerSweep | ExperimentKind::SimSweep | ExperimentKind::CapacitySweep | ExperimentKind::GnCapacity
        );
        if needs_power {
            self.powers_dbm()?;
        }
        let needs_memory = matches!(kind, ExperimentKind::BerSerSweep | ExperimentKind::SimSweep | ExperimentKind::CapacitySweep);
        if needs_memory && self.memories().is_empty() {
            return Err(schema("memory list is empty"));
        }
        let e = &self.engine;
        if kind == ExperimentKind::SimSweep {
            if e.trials == 0 || e.symbols_per_trial == 0 {
                return Err(schema("engine.trials and engine.symbols_per_trial must be positive"));
            }
            let max_n = self.memories().into_iter().filter_map(|m| match m {
                Memory::Finite(n) => Some(n),
                _ => None,
            });
            if let Some(n) = max_n.max() {
                if e.symbols_per_trial < 2 * n + 1 {
                    return Err(schema(format!("engine.symbols_per_trial must be at least 2N+1 = {}", 2 * n + 1)));
                }
            }
        }
        if kind == ExperimentKind::CapacitySweep {
            if e.mc_samples < 2 || e.search_samples < 2 {
                return Err(schema("engine.mc_samples and engine.search_samples must be at least 2"));
            }
            if e.quadrature_nodes < 16 {
                return Err(schema("engine.quadrature_nodes must be at least 16"));
            }
            if let Some(Experiment::CapacitySweep { grid: Some(g), .. }) = &self.experiment {
                if g.nu.is_empty() || g.ratio.is_empty() {
                    return Err(schema("capacity search grid is empty"));
                }
            }
        }
        Ok(())
    }

    pub fn powers_dbm(&self) -> Result<Vec<f64>> {
        self.sweep.power_dbm.as_ref().ok_or_else(|| schema("sweep.power_dbm missing"))?.values()
    }

    pub fn memories(&self) -> Vec<Memory> {
        self.sweep.memory.clone().unwrap_or_default()
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form, without the
    /// output table.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("output");
        }
        let digest = Sha256::digest(value.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn default_sweep(kind: ExperimentKind) -> (Option<PowerGrid>, Option<Vec<Memory>>) {
    use Memory::*;
    match kind {
        ExperimentKind::BerSerSweep => (
            Some(PowerGrid::range(-12.0, 6.0, 0.5)),
            Some(vec![Finite(1), Finite(5), Finite(50), Infinite]),
        ),
        ExperimentKind::SimSweep => (Some(PowerGrid::List(vec![-8.0, -2.0, 2.0])), Some(vec![Finite(1), Finite(5)])),
        ExperimentKind::CapacitySweep => (
            Some(PowerGrid::range(-10.0, 10.0, 2.0)),
            Some(vec![Finite(1), Finite(2), Finite(5)]),
        ),
        ExperimentKind::GnCapacity => (Some(PowerGrid::range(-20.0, 15.0, 0.5)), None),
        _ => (None, None),
    }
}
