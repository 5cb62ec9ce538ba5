//! Run metrics, computed from log rows only.

use platoon_core::platoon::LogRow;
use platoon_core::stmpc::ControlMode;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub agent: usize,
    pub iae: f64,
    /// First actively controlled tick with `j = 0`. Stopped ticks are
    /// skipped: their error is measured against a held reference.
    pub first_terminal_tick: Option<usize>,
    /// Largest `err_norm` from `first_terminal_tick` on.
    pub max_err_after_terminal: Option<f64>,
    pub final_eta: Option<usize>,
    pub max_wheel_speed: Option<f64>,
    pub min_dist_to_pred: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub agents: Vec<AgentMetrics>,
}

impl RunMetrics {
    pub fn min_inter_agent_distance(&self) -> Option<f64> {
        self.agents
            .iter()
            .filter_map(|a| a.min_dist_to_pred)
            .reduce(f64::min)
    }
}

fn center_error(r: &LogRow) -> f64 {
    ((r.xr - r.x).powi(2) + (r.yr - r.y).powi(2)).sqrt()
}

/// Rectangle-rule integral of the geometric-center tracking error of agent `i`.
pub fn compute_iae(rows: &[LogRow], i: usize, sample_time: f64) -> f64 {
    rows.iter()
        .filter(|r| r.i == i)
        .map(|r| center_error(r) * sample_time)
        .sum()
}

fn fmax(acc: Option<f64>, x: f64) -> Option<f64> {
    Some(acc.map_or(x, |a| a.max(x)))
}

pub fn compute_metrics(rows: &[LogRow], n_agents: usize, sample_time: f64) -> RunMetrics {
    let agents = (0..n_agents)
        .map(|i| {
            let mine: Vec<&LogRow> = rows.iter().filter(|r| r.i == i).collect();
            let first_terminal = mine
                .iter()
                .position(|r| r.j == Some(0) && r.mode != ControlMode::Stopped);
            AgentMetrics {
                agent: i,
                iae: compute_iae(rows, i, sample_time),
                first_terminal_tick: first_terminal.map(|p| mine[p].k),
                max_err_after_terminal: first_terminal
                    .and_then(|p| mine[p..].iter().map(|r| r.err_norm).fold(None, fmax)),
                final_eta: if i == 0 { None } else { mine.last().map(|r| r.eta) },
                max_wheel_speed: mine
                    .iter()
                    .map(|r| r.omega_r.abs().max(r.omega_l.abs()))
                    .fold(None, fmax),
                min_dist_to_pred: mine
                    .iter()
                    .filter_map(|r| r.min_dist_to_pred)
                    .reduce(f64::min),
            }
        })
        .collect();
    RunMetrics { agents }
}
