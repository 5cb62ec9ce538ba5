use platoon_core::platoon::{Formation, LogRow, PlatoonError};

use crate::checks::{all_passed, run_checks, CheckOutcome};
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("startup checks failed: {}", failed(.0))]
    Checks(Vec<CheckOutcome>),
    #[error("startup rejected: {0}")]
    Startup(PlatoonError),
}

fn failed(outcomes: &[CheckOutcome]) -> String {
    outcomes
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Overrides the scenario's tick count.
    pub ticks: Option<usize>,
    pub seed: u64,
    pub parallel: bool,
}

/// Log of a run. `abort` is set when a tick failed; `rows` then holds every
/// completed tick.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub rows: Vec<LogRow>,
    pub n_agents: usize,
    pub sample_time: f64,
    pub abort: Option<PlatoonError>,
}

pub fn run_simulation(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, SimError> {
    let mut s = scenario.clone();
    if let Some(t) = opts.ticks {
        s.ticks = t;
    }
    let prepared = s.prepare(opts.seed)?;
    let checks = run_checks(&s, &prepared);
    if !all_passed(&checks) {
        return Err(SimError::Checks(checks));
    }
    let agents = prepared.agents(s.n_sets)?;
    let n_agents = agents.len();
    let mut formation =
        Formation::new(prepared.config.clone(), agents, prepared.trajectory.clone()).map_err(SimError::Startup)?;

    let mut rows = Vec::with_capacity(s.ticks * n_agents);
    let mut abort = None;
    for _ in 0..s.ticks {
        match formation.step(opts.parallel) {
            Ok(tick_rows) => rows.extend(tick_rows),
            Err(e) => {
                abort = Some(e);
                break;
            }
        }
    }
    Ok(RunOutput {
        rows,
        n_agents,
        sample_time: prepared.params.sample_time,
        abort,
    })
}
