use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use platoon_core::stmpc::build_rosc_family;
use platoon_sim::checks::{all_passed, run_checks};
use platoon_sim::engine::{run_simulation, RunOptions, SimError};
use platoon_sim::metrics::compute_metrics;
use platoon_sim::output::{self, LOG_FILE, METRICS_FILE};
use platoon_sim::{exit, Scenario};
use serde_json::json;

#[derive(Parser)]
#[command(name = "simcli", version, about = "Deterministic simulator for constrained differential-drive platoons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every startup validation and report PASS/FAIL per check.
    Check { scenario: PathBuf },
    /// Simulate a scenario and write log.csv and metrics.csv.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ticks: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evaluate followers concurrently within each tick.
        #[arg(long)]
        parallel: bool,
    },
    /// Dump controllable-set radii and input-constraint data.
    Sets {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a run's log.csv into per-agent series under <dir>/plot.
    Plotdata { dir: PathBuf },
    /// Print the built-in three-robot scenario as JSON.
    DefaultScenario,
}

struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(code: i32, kind: &'static str, message: impl ToString) -> Self {
        Self { code, kind, message: message.to_string() }
    }

    fn io(e: impl ToString) -> Self {
        Self::new(exit::RUNTIME, "io", e)
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    Scenario::load(path).map_err(|e| Failure::new(exit::VALIDATION, "scenario", e))
}

fn check(path: &Path) -> Result<(), Failure> {
    let s = load(path)?;
    let p = s.prepare(0).map_err(|e| Failure::new(exit::VALIDATION, "scenario", e))?;
    let outcomes = run_checks(&s, &p);
    for c in &outcomes {
        println!("{c}");
    }
    if all_passed(&outcomes) {
        Ok(())
    } else {
        let failed: Vec<String> = outcomes.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
        Err(Failure::new(exit::VALIDATION, "validation", failed.join("; ")))
    }
}

fn simulate(path: &Path, out: &Path, opts: RunOptions) -> Result<(), Failure> {
    let s = load(path)?;
    let run = run_simulation(&s, &opts).map_err(|e| match e {
        SimError::Checks(_) | SimError::Scenario(_) | SimError::Startup(_) => {
            Failure::new(exit::VALIDATION, "validation", e)
        }
    })?;
    std::fs::create_dir_all(out).map_err(Failure::io)?;
    output::write_log(&out.join(LOG_FILE), &run.rows).map_err(Failure::io)?;
    let metrics = compute_metrics(&run.rows, run.n_agents, run.sample_time);
    output::write_metrics(&out.join(METRICS_FILE), &metrics).map_err(Failure::io)?;
    if let Some(e) = run.abort {
        return Err(Failure::new(exit::RUNTIME, "abort", e));
    }
    for a in &metrics.agents {
        println!(
            "agent {} iae={:.4} first_j0={} final_eta={}",
            a.agent,
            a.iae,
            a.first_terminal_tick.map_or("-".into(), |k| k.to_string()),
            a.final_eta.map_or("-".into(), |e| e.to_string()),
        );
    }
    Ok(())
}

fn sets(path: &Path, out: &Path) -> Result<(), Failure> {
    let s = load(path)?;
    let p = s.prepare(0).map_err(|e| Failure::new(exit::VALIDATION, "scenario", e))?;
    let ts = p.params.sample_time;
    let invalid = |e: platoon_core::stmpc::StmpcError| Failure::new(exit::VALIDATION, "validation", e);
    let mut families = vec![build_rosc_family(&p.leader, s.r_u_leader, ts, s.n_sets).map_err(invalid)?];
    for _ in 1..s.agents.len() {
        families.push(build_rosc_family(&p.follower, p.config.suite.r_u_inner, ts, s.n_sets).map_err(invalid)?);
    }
    output::write_sets(out, &p.config.suite, &families).map_err(Failure::io)?;
    println!("r_u_inner {}", p.config.suite.r_u_inner);
    println!("r_u_outer {}", p.config.suite.r_u_outer);
    Ok(())
}

fn plotdata(dir: &Path) -> Result<(), Failure> {
    let rows = output::read_log(&dir.join(LOG_FILE)).map_err(|e| Failure::new(exit::VALIDATION, "log", e))?;
    let n = output::write_plotdata(&rows, &dir.join("plot")).map_err(Failure::io)?;
    println!("wrote series for {n} agents to {}", dir.join("plot").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = match cli.command {
        Command::Check { scenario } => check(&scenario),
        Command::Simulate { scenario, out, ticks, seed, parallel } => {
            simulate(&scenario, &out, RunOptions { ticks, seed, parallel })
        }
        Command::Sets { scenario, out } => sets(&scenario, &out),
        Command::Plotdata { dir } => plotdata(&dir),
        Command::DefaultScenario => {
            print!("{}", Scenario::default_reconstruction().to_json());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "code": f.code, "message": f.message }));
            ExitCode::from(f.code as u8)
        }
    }
}
