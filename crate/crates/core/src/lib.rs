//! Deterministic discrete-event simulator of a multi-hop wireless sensor
//! network with multipath routing, five-queue priority buffering, EDF
//! packet scheduling and service-ratio driven rate control.
//!
//! Geometry and energy are generic over [`Scalar`] (`f32` or `f64`); rates
//! are 16.8 fixed point ([`Rate`]) and the clock is integer milliseconds.
//! The aliases at the crate root pin the scalar to `f64`:
//!
//! ```
//! use wsn_core::{run_simulation, MetricsReport, SimConfig};
//!
//! let config = SimConfig { duration_ms: 2_000, ..SimConfig::default() };
//! let report: MetricsReport = run_simulation(&config, 7).unwrap();
//! assert!(report.counts.is_conserved());
//! ```

pub mod config;
pub mod energy;
pub mod engine;
pub mod experiment;
pub mod metrics;
pub mod packet;
pub mod queueing;
pub mod rate;
pub mod ratecontrol;
mod rng;
pub mod scalar;
pub mod scheduler;
pub mod topology;

pub use config::{
    parse_config, ConfigError, CongestionSignal, RateCapMode, SimConfig, SinkPlacement, PACKET_SIZE,
};
pub use energy::{energy_tx, EnergyError, ProcessingComponent};
pub use engine::{run_simulation, EngineError, HopOutcome};
pub use experiment::{compare, sweep, sweep_service_ratio, SweepRow};
pub use metrics::{RunChecks, RunCounts, SeriesRow};
pub use packet::{decode_header, encode_header, CodecError, Packet, PacketHeader, PiggybackFields};
pub use queueing::{classify, QueueClass, QueueError};
pub use rate::Rate;
pub use ratecontrol::{RateControlParams, RateError, RateState};
pub use scalar::Scalar;
pub use scheduler::{
    brute_force_min_lateness, edf_schedule, utilization, Job, SchedError, SchedulerState,
};
pub use topology::{NodeId, SearchBudget, TopologyError};

/// Default-precision aliases.
pub type Topology = topology::Topology<f64>;
pub type Point = topology::Point<f64>;
pub type EnergyLedger = energy::EnergyLedger<f64>;
pub type MetricsReport = metrics::MetricsReport<f64>;
pub type NodeReport = metrics::NodeReport<f64>;
pub type Simulation = engine::Simulation<f64>;
pub type ComparePair = experiment::ComparePair<f64>;
pub type TaskParams = scheduler::TaskParams<f64>;
pub type QueueSet = queueing::QueueSet<Packet>;

/// Single-precision aliases.
pub type Topology32 = topology::Topology<f32>;
pub type EnergyLedger32 = energy::EnergyLedger<f32>;
pub type MetricsReport32 = metrics::MetricsReport<f32>;
pub type Simulation32 = engine::Simulation<f32>;
