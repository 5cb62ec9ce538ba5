//! CSV files written by the CLI.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use platoon_core::constraints::InputConstraintSuite;
use platoon_core::platoon::LogRow;
use platoon_core::stmpc::RoscFamily;
use serde::Serialize;

use crate::metrics::RunMetrics;

pub const LOG_FILE: &str = "log.csv";
pub const METRICS_FILE: &str = "metrics.csv";

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a header-only file when `rows` is empty.
fn write_with_header<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> csv::Result<()> {
    if rows.is_empty() {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)?;
        w.write_record(header)?;
        w.flush()?;
        return Ok(());
    }
    write_rows(path, rows)
}

pub const LOG_COLUMNS: [&str; 23] = [
    "k", "i", "x", "y", "theta", "z1", "z2", "zr1", "zr2", "err_norm", "j", "mode", "u1", "u2", "v", "omega",
    "omega_r", "omega_l", "eta", "gate_fired", "min_dist_to_pred", "xr", "yr",
];

pub fn write_log(path: &Path, rows: &[LogRow]) -> csv::Result<()> {
    write_with_header(path, &LOG_COLUMNS, rows)
}

pub fn read_log(path: &Path) -> csv::Result<Vec<LogRow>> {
    csv::Reader::from_path(path)?.deserialize().collect()
}

pub fn write_metrics(path: &Path, metrics: &RunMetrics) -> csv::Result<()> {
    write_with_header(
        path,
        &[
            "agent",
            "iae",
            "first_terminal_tick",
            "max_err_after_terminal",
            "final_eta",
            "max_wheel_speed",
            "min_dist_to_pred",
        ],
        &metrics.agents,
    )
}

#[derive(Serialize)]
struct Quantity {
    quantity: &'static str,
    value: f64,
}

#[derive(Serialize)]
struct RadiusRow {
    agent: usize,
    j: usize,
    radius: f64,
}

#[derive(Serialize)]
struct HRow {
    theta_deg: u32,
    row: usize,
    h1: f64,
    h2: f64,
}

/// `input_bounds.csv`, `rosc_radii.csv` and `h_theta.csv` (1° grid).
pub fn write_sets(dir: &Path, suite: &InputConstraintSuite, families: &[RoscFamily]) -> csv::Result<()> {
    fs::create_dir_all(dir)?;
    write_rows(
        &dir.join("input_bounds.csv"),
        [
            Quantity { quantity: "r_u_inner", value: suite.r_u_inner },
            Quantity { quantity: "r_u_outer", value: suite.r_u_outer },
        ],
    )?;
    write_rows(
        &dir.join("rosc_radii.csv"),
        families.iter().enumerate().flat_map(|(agent, f)| {
            f.radii()
                .iter()
                .enumerate()
                .map(move |(j, &radius)| RadiusRow { agent, j, radius })
        }),
    )?;
    write_rows(
        &dir.join("h_theta.csv"),
        (0..360u32).flat_map(|deg| {
            let h = suite.at_heading(f64::from(deg).to_radians());
            h.rows()
                .iter()
                .enumerate()
                .map(|(row, r)| HRow { theta_deg: deg, row, h1: r.x, h2: r.y })
                .collect::<Vec<_>>()
        }),
    )
}

#[derive(Serialize)]
struct TrajectoryPoint {
    k: usize,
    x: f64,
    y: f64,
    xr: f64,
    yr: f64,
}

#[derive(Serialize)]
struct WheelPoint {
    k: usize,
    omega_r: f64,
    omega_l: f64,
}

#[derive(Serialize)]
struct ErrorPoint {
    k: usize,
    err_norm: f64,
    j: Option<usize>,
    eta: usize,
}

/// Splits a log into per-agent trajectory, wheel-speed and error series
/// under `out`. Returns the number of agents found.
pub fn write_plotdata(rows: &[LogRow], out: &Path) -> csv::Result<usize> {
    fs::create_dir_all(out)?;
    let mut by_agent: BTreeMap<usize, Vec<&LogRow>> = BTreeMap::new();
    for r in rows {
        by_agent.entry(r.i).or_default().push(r);
    }
    for (i, rs) in &by_agent {
        write_rows(
            &out.join(format!("trajectory_{i}.csv")),
            rs.iter().map(|r| TrajectoryPoint { k: r.k, x: r.x, y: r.y, xr: r.xr, yr: r.yr }),
        )?;
        write_rows(
            &out.join(format!("wheels_{i}.csv")),
            rs.iter().map(|r| WheelPoint { k: r.k, omega_r: r.omega_r, omega_l: r.omega_l }),
        )?;
        write_rows(
            &out.join(format!("error_{i}.csv")),
            rs.iter().map(|r| ErrorPoint { k: r.k, err_norm: r.err_norm, j: r.j, eta: r.eta }),
        )?;
    }
    Ok(by_agent.len())
}
