//! System-level simulator for mmWave repeater and relay deployments.
//!
//! The crate is layered bottom-up: closed-form relay link laws
//! ([`relay_math`]), a Manhattan-grid scene generator ([`topology`]), street
//! canyon propagation ([`propagation`]), array gain patterns
//! ([`beamforming`]), received-power association ([`association`]) and a
//! slot-level round-robin scheduler ([`scheduler`]). [`experiment`] runs
//! cases over drops and [`metrics`] turns the samples into CDF files.

pub mod association;
pub mod beamforming;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod propagation;
pub mod relay_math;
pub mod scheduler;
pub mod topology;
pub mod units;

pub use config::{load_config, ScenarioConfig};
pub use error::{Error, Result};
pub use experiment::{run_experiment, run_experiment_on};
pub use metrics::{emit_cdfs, CdfSeries, Metric, MetricStore};
pub use scheduler::RelayCase;
