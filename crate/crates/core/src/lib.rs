//! Finite-memory GN-model laboratory for coherent fiber links.
//!
//! The crate provides the channel model with a sliding window of `2N + 1`
//! symbols, the 16-QAM modem and MED detector, exact error-rate expressions,
//! Monte Carlo estimators, capacity bounds and a split-step fiber simulator.

pub mod analytic;
pub mod capacity;
pub mod channel;
pub mod error;
pub mod modem;
pub mod montecarlo;
pub mod params;
pub mod rng;
pub mod special;
pub mod waveform;

pub use error::{Error, Result};
pub use params::{NoiseParams, PowerDbm, SystemParams};
