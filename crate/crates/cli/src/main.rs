use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use satrack::config::{self, ConfigError};
use satrack::metrics::compute_metrics;
use satrack::trace_io;
use satrack_core::planner::build_search_map;
use satrack_core::{OverlapConfig, Scenario};

#[derive(Parser)]
#[command(
    name = "satrack",
    version,
    about = "Decentralized multi-agent search and track simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the trace file.
    Simulate {
        /// Scenario file (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Master RNG seed.
        #[arg(long)]
        seed: u64,
        /// Trace output path (newline-delimited JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute OSPA, coverage, latency and overlap metrics from a trace.
    Metrics {
        /// Trace file written by simulate.
        #[arg(long)]
        trace: PathBuf,
        /// Report output path (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the initial search plan without running the simulation.
    Plan {
        /// Scenario file (JSON).
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a scenario file and report every violation.
    Validate {
        /// Scenario file (JSON).
        #[arg(long)]
        config: PathBuf,
    },
}

/// Config failures exit with 2, everything else that goes wrong with 3.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, seed, out } => simulate(&config, seed, &out),
        Command::Metrics { trace, out } => metrics(&trace, &out),
        Command::Plan { config } => plan(&config),
        Command::Validate { config } => validate(&config),
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    config::load_scenario(path).map_err(|e| match e {
        // Unreadable config files are config errors too: the operator
        // pointed the tool at something that is not a scenario.
        ConfigError::Unreadable { .. } | ConfigError::Malformed { .. } => Failure::Config(e.into()),
        ConfigError::Invalid(_) => Failure::Config(e.into()),
    })
}

fn simulate(config: &Path, seed: u64, out: &Path) -> Result<(), Failure> {
    let scenario = load(config)?;
    log::info!(
        "running {} agents, {} targets, {} steps, seed {}",
        scenario.agents.len(),
        scenario.targets.len(),
        scenario.steps,
        seed
    );
    let trace = satrack_core::run(&scenario, seed)
        .context("simulation failed")
        .map_err(Failure::Runtime)?;
    trace_io::write_trace_file(&trace, seed, out).map_err(|e| Failure::Runtime(e.into()))?;
    println!("wrote {} steps to {}", trace.steps.len(), out.display());
    Ok(())
}

fn metrics(trace_path: &Path, out: &Path) -> Result<(), Failure> {
    let (seed, trace) = trace_io::read_trace_file(trace_path)
        .with_context(|| format!("reading trace {}", trace_path.display()))
        .map_err(Failure::Runtime)?;
    let report = compute_metrics(&trace, &OverlapConfig::default());
    let text = serde_json::to_string_pretty(&report)
        .context("serializing report")
        .map_err(Failure::Runtime)?;
    std::fs::write(out, text + "\n")
        .with_context(|| format!("writing report {}", out.display()))
        .map_err(Failure::Runtime)?;
    let steps = report.ospa.len();
    let mean_ospa = if steps == 0 {
        0.0
    } else {
        report.ospa.iter().sum::<f64>() / steps as f64
    };
    let final_coverage = report.coverage.last().copied().unwrap_or(0.0);
    println!(
        "seed {seed}: {steps} steps, mean OSPA {mean_ospa:.3}, final coverage {final_coverage:.3}, {} overlap exits",
        report.overlap_exits.len()
    );
    Ok(())
}

fn plan(config: &Path) -> Result<(), Failure> {
    let scenario = load(config)?;
    if scenario.agents.is_empty() {
        println!("no agents, nothing to plan");
        return Ok(());
    }
    let map = build_search_map(&scenario.area, scenario.cell_side)
        .context("building search map")
        .map_err(Failure::Config)?;
    let unvisited: BTreeSet<usize> = (0..map.node_count()).collect();
    let mut agents = scenario.agents.clone();
    agents.sort_by_key(|a| a.id);
    let starts: Vec<_> = agents.iter().map(|a| a.start).collect();
    let walks = satrack_core::planner::plan_joint_walks(&map, &starts, &unvisited)
        .context("planning joint walks")
        .map_err(Failure::Runtime)?;
    println!(
        "joint search plan over {} cells for {} agents:",
        map.node_count(),
        agents.len()
    );
    for (agent, walk) in agents.iter().zip(&walks) {
        let path: Vec<String> = walk
            .nodes
            .iter()
            .map(|&n| {
                let c = map.center(n);
                format!("{n}@({},{})", c.x, c.y)
            })
            .collect();
        println!(
            "agent {} from ({},{}): {} cells: {}",
            agent.id,
            agent.start.x,
            agent.start.y,
            walk.nodes.len(),
            path.join(" -> ")
        );
    }
    Ok(())
}

fn validate(config: &Path) -> Result<(), Failure> {
    let scenario = load(config)?;
    println!(
        "ok: {} agents, {} targets, {} steps",
        scenario.agents.len(),
        scenario.targets.len(),
        scenario.steps
    );
    Ok(())
}
