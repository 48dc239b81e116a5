//! Command-line front end: solve a single routing instance, benchmark the
//! solvers against the exact oracle, run a traffic scenario, or replay a
//! sensor log through the telemetry pipeline.
//!
//! Exit codes are part of the contract: 0 success, 1 input or
//! configuration error, 2 finished-but-unusable (no convergence, no path
//! found, broken run invariant), 3 unreachable destination.

mod compare;
mod overrides;
mod replay;
mod route;
mod simulate;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use riverroute::{RoadGraph64, RoadNetwork64};

#[derive(Parser)]
#[command(
    name = "riverroute",
    version,
    about = "Water-drop routing on road graphs: solve, benchmark, simulate, replay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one origin-to-destination instance on a graph file.
    Route(route::RouteArgs),
    /// Benchmark solvers over repeated seeded trials against the oracle.
    Compare(compare::CompareArgs),
    /// Run a traffic scenario and write its metric streams.
    Simulate(simulate::SimulateArgs),
    /// Replay a sensor log through the telemetry pipeline.
    Replay(replay::ReplayArgs),
}

/// How a failed run terminates the process.
#[derive(Debug)]
pub enum Failure {
    /// Missing or malformed files, unknown nodes, invalid parameters.
    Input(anyhow::Error),
    /// The run finished but its result is unusable: no convergence, no
    /// walker arrived, or a run invariant did not hold.
    Quality(anyhow::Error),
    /// The instance admits no route at all.
    Unreachable(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Quality(_) => 2,
            Failure::Unreachable(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Quality(e) | Failure::Unreachable(e) => e,
        }
    }
}

pub type CmdResult = Result<(), Failure>;

pub fn input_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Input(e.into())
}

pub fn quality_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Quality(e.into())
}

pub fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input_err)
}

pub fn load_graph(path: &Path) -> Result<RoadGraph64, Failure> {
    let text = read_file(path)?;
    RoadGraph64::from_json_str(&text)
        .with_context(|| format!("graph {}", path.display()))
        .map_err(input_err)
}

pub fn load_network(path: &Path) -> Result<RoadNetwork64, Failure> {
    let text = read_file(path)?;
    riverroute::sim::load_network(text.as_bytes())
        .with_context(|| format!("network {}", path.display()))
        .map_err(input_err)
}

/// Writes one output file under the run's output directory, creating the
/// directory on first use.
pub fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(input_err)?;
    let path = dir.join(name);
    fs::write(&path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(input_err)?;
    Ok(path)
}

/// Renders the reproducibility stanza written alongside every run's
/// outputs: the command, its inputs, and the fully resolved configuration.
pub fn write_stanza(dir: &Path, doc: toml::value::Table) -> CmdResult {
    let text = toml::to_string_pretty(&toml::Value::Table(doc))
        .context("rendering run_config.toml")
        .map_err(input_err)?;
    write_output(dir, "run_config.toml", &text)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too and must stay exit 0;
            // genuine usage mistakes are input errors.
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Route(a) => route::run(&a),
        Command::Compare(a) => compare::run(&a),
        Command::Simulate(a) => simulate::run(&a),
        Command::Replay(a) => replay::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
