//! Simulation toolkit for FRIS-assisted links received by a Rydberg atomic receiver.
//!
//! The crate covers channel synthesis, the magnitude-only readout model, the
//! quadrature-leakage objective, its alternating optimizer, symbol detection and
//! a Monte-Carlo harness.

pub mod channel;
pub mod config;
pub mod detection;
pub mod harness;
pub mod measurement;
pub mod numerics;
pub mod objective;
pub mod optimizer;
pub mod rng;
pub mod validate;

pub use channel::{equivalent_channel, ChannelModel, ChannelSet, FrisState};
pub use config::{ConfigError, DetectorKind, Mode, Modulation, Scheme, StopRule, SweepAxis, SystemConfig};
pub use harness::{BerRecord, ExperimentSpec, HarnessError};
pub use numerics::{ComplexMatrix, ComplexVector};
pub use objective::{LeakageContext, SymbolModel};
pub use optimizer::{ao_solve, AoConfig, AoReport, OptimizerError};
