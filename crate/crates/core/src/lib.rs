//! Deterministic discrete-event simulator for a delay-tolerant bundle layer
//! with custody transfer, plus the trace analyzer that turns runs into
//! per-pause-time tables and derived metrics.
//!
//! A run goes scenario catalog -> [`sim::Simulation`] -> trace records ->
//! [`metrics`]. The analyzer also accepts hand-entered counts, so the metric
//! arithmetic can be checked without running anything.

pub mod bundle;
pub mod cli;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod stack;
pub mod time;
pub mod topology;
pub mod trace;

pub use error::{Error, Result};
pub use scenario::{build_scenario, Catalog, ScenarioSpec};
pub use sim::{ModelParams, SimConfig, Simulation};
pub use time::SimTime;
pub use topology::NodeId;
pub use trace::{TraceRecord, TraceSink};
