//! Simulator and analysis toolkit for energy-harvesting body-area
//! nanonetworks communicating in the terahertz band.
//!
//! Pipeline: [`topology`] scatters sensors and registers them in
//! concentric layers around the nanocontroller; [`clustering`] elects
//! cluster heads once; [`scheduler`] lays out each cycle's nested TDMA
//! timeline; [`engine`] runs cycles and parameter sweeps on top of the
//! [`channel`] and [`energy`] models; [`mcoutage`] cross-checks fused-link
//! outage by Monte Carlo; [`report`] writes the CSV tables.

pub mod channel;
pub mod clustering;
pub mod energy;
pub mod engine;
pub mod mcoutage;
pub mod netmodel;
pub mod report;
pub mod scheduler;
pub mod topology;

pub use channel::{ChannelError, DbNormal, LinkBudget};
pub use clustering::{Cluster, ClusterError};
pub use energy::{EnergyChain, EnergyError, EnergyParams};
pub use engine::{CycleTrace, EngineError, MetricsTable, WorldState};
pub use mcoutage::{McPoint, McRun};
pub use netmodel::{
    validate_config, ChannelParams, ConfigError, Energy, NodeId, NodeState, Position, Role,
    SimConfig, ValidatedConfig,
};
pub use scheduler::{Timeline, TransmissionRequest};
pub use topology::Deployment;
