//! Deterministic network simulator for the anonymizing overlay: topology
//! descriptions, a discrete-event engine with latency/bandwidth links, node
//! applications (consumers, anonymizing routers, producers, a directory)
//! and adversary instrumentation — taps, compromises, replays and the
//! resulting observation log.

pub mod adversary;
pub mod apps;
pub mod engine;
pub mod topology;
pub mod trace;

pub use adversary::{Adversary, AdversaryState, Observation};
pub use apps::{CostModel, FetchMode, FetchReport, FetchRequest};
pub use engine::{RunOutput, Sim, SimBuilder, SimError, SimOptions};
pub use topology::{ConfigError, Role, Topology};
pub use trace::TraceLog;
