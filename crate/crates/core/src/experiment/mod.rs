//! Seeded experiment harness behind the `curlow` command line.
//!
//! Every command is a pure function of its configuration: trial `k` draws
//! all randomness from `RngStream::new(seed, 0).child(1).child(k)`, trials
//! may run in parallel, and outputs are written in trial order.

pub mod commands;
pub mod config;
pub mod trial;

pub use commands::*;
pub use config::{Budget, CheckId, CoherenceChoice, ExperimentConfig, SynthConfig, SynthKind};
