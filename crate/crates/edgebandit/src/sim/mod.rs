//! Scenario configuration, topology and population generation, the
//! per-slot experiment protocol, metrics, and stable file outputs.

pub mod config;
pub mod output;
pub mod population;
pub mod run;
pub mod topology;

pub use config::{Association, DemandSpec, PolicyName, ScenarioConfig};
pub use run::{
    build_policy, check_invariants, compute_mse, demand_allocation, log_log_slope,
    run_experiment, run_replications, Checkpoint, ExperimentResult, MetricsReport, SlotTrace,
};
pub use topology::{generate_topology, overlap_degree, Topology};
