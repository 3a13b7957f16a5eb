//! Seeded, tick-based multi-agent simulation of an airport where some
//! passengers are assisted by ambient-intelligence services (location-aware
//! service discovery) and the rest find their way using information panels.

pub mod agents;
pub mod engine;
pub mod experiment;
pub mod messaging;
pub mod metrics;
pub mod ontology;
pub mod protocol;
pub mod services;
pub mod world;

pub use engine::{run, SetupParameters};
pub use experiment::{batch, load_config, ExperimentConfig};
pub use metrics::{RunResult, SummaryTable};
pub use world::{build_layout, AirportMap};
