//! Scenario files, the simulation engine, metrics and CSV output behind the
//! `simcli` binary.

pub mod checks;
pub mod engine;
pub mod metrics;
pub mod output;
pub mod scenario;

pub use engine::{run_simulation, RunOptions, RunOutput, SimError};
pub use metrics::{compute_iae, compute_metrics, RunMetrics};
pub use scenario::{Scenario, ScenarioError};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const RUNTIME: i32 = 3;
}
