//! `route`: solve one origin-to-destination instance and report the path.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use riverroute::baselines::{aco_solve, random_walk_solve, AcoError, WalkError, WalkParams};
use riverroute::graph::{dijkstra_shortest_path, GraphError};
use riverroute::rfd::{solve, RfdError};
use riverroute::{AcoParams64, PathResult64, RfdParams64, RoadGraph64, SolveStats};

use crate::{input_err, overrides, write_output, write_stanza, CmdResult, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// Water-drop landscape solver.
    Rfd,
    /// Ant-system pheromone solver.
    Aco,
    /// Loop-erased random-walk ensemble.
    Walk,
    /// Exact shortest path.
    Dijkstra,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Rfd => "rfd",
            Algo::Aco => "aco",
            Algo::Walk => "walk",
            Algo::Dijkstra => "dijkstra",
        }
    }
}

#[derive(Args)]
pub struct RouteArgs {
    /// Graph file (JSON).
    #[arg(long)]
    graph: PathBuf,
    /// Origin node id.
    #[arg(long)]
    origin: String,
    /// Destination node id.
    #[arg(long)]
    dest: String,
    #[arg(long, value_enum)]
    algo: Algo,
    /// Overrides the solver's seed (ignored by dijkstra).
    #[arg(long)]
    seed: Option<u64>,
    /// Solver parameter override as a key=value pair, repeatable
    /// (e.g. --set drops_per_iteration=64). Keys are the chosen solver's
    /// field names.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory receiving route.csv and run_config.toml.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

pub fn run(a: &RouteArgs) -> CmdResult {
    let g = crate::load_graph(&a.graph)?;
    match a.algo {
        Algo::Rfd => run_rfd(a, &g),
        Algo::Aco => run_aco(a, &g),
        Algo::Walk => run_walk(a, &g),
        Algo::Dijkstra => run_dijkstra(a, &g),
    }
}

pub fn comma_string(p: &PathResult64) -> String {
    p.nodes
        .iter()
        .map(|n| n.as_str())
        .collect::<Vec<_>>()
        .join(",")
}

/// Prints the answer, writes the one-row result CSV, and writes the
/// reproducibility stanza. Quality failures still get a row so sweeps can
/// count them.
#[allow(clippy::too_many_arguments)]
fn emit(
    a: &RouteArgs,
    seed: Option<u64>,
    params: Option<toml::Value>,
    success: bool,
    path: Option<&PathResult64>,
    iterations: Option<u32>,
    converged: bool,
    stat_lines: &[(&str, String)],
) -> CmdResult {
    match path {
        Some(p) => {
            println!("path {}", comma_string(p));
            println!("cost {}", p.total_cost);
        }
        None => println!("path none"),
    }
    for (key, value) in stat_lines {
        println!("{key} {value}");
    }

    let mut csv = String::from("algo,origin,dest,seed,success,cost,iterations,converged,path\n");
    let seed_s = seed.map(|s| s.to_string()).unwrap_or_default();
    let cost_s = path.map(|p| p.total_cost.to_string()).unwrap_or_default();
    let iterations_s = iterations.map(|i| i.to_string()).unwrap_or_default();
    let path_s = path.map(PathResult64::pipe_string).unwrap_or_default();
    csv.push_str(&format!(
        "{},{},{},{seed_s},{success},{cost_s},{iterations_s},{converged},{path_s}\n",
        a.algo.name(),
        a.origin,
        a.dest,
    ));
    write_output(&a.out_dir, "route.csv", &csv)?;

    let mut doc = toml::value::Table::new();
    doc.insert("command".into(), "route".into());
    doc.insert("graph".into(), a.graph.display().to_string().into());
    doc.insert("origin".into(), a.origin.clone().into());
    doc.insert("dest".into(), a.dest.clone().into());
    doc.insert("algo".into(), a.algo.name().into());
    if let Some(s) = seed {
        doc.insert("seed".into(), toml_u64(s));
    }
    if let Some(p) = params {
        doc.insert(a.algo.name().into(), p);
    }
    write_stanza(&a.out_dir, doc)
}

/// TOML integers are i64; seeds beyond that are kept as strings.
pub fn toml_u64(v: u64) -> toml::Value {
    match i64::try_from(v) {
        Ok(i) => i.into(),
        Err(_) => v.to_string().into(),
    }
}

fn solver_stat_lines(stats: &SolveStats) -> Vec<(&'static str, String)> {
    vec![
        ("iterations", stats.iterations.to_string()),
        ("launched", stats.launched.to_string()),
        ("completions", stats.completions.to_string()),
        ("deposits", stats.deposits.to_string()),
        ("converged", stats.converged.to_string()),
    ]
}

fn run_rfd(a: &RouteArgs, g: &RoadGraph64) -> CmdResult {
    let mut p: RfdParams64 =
        overrides::apply(&RfdParams64::default(), &a.set).map_err(input_err)?;
    if let Some(s) = a.seed {
        p.seed = s;
    }
    let params = toml::Value::try_from(&p).map_err(input_err)?;
    match solve(g, &a.origin, &a.dest, &p) {
        Ok(out) => emit(
            a,
            Some(p.seed),
            Some(params),
            true,
            Some(&out.path),
            Some(out.stats.iterations),
            true,
            &solver_stat_lines(&out.stats),
        ),
        Err(RfdError::NotConverged { stats, last_path }) => {
            emit(
                a,
                Some(p.seed),
                Some(params),
                false,
                last_path.as_ref(),
                Some(stats.iterations),
                false,
                &solver_stat_lines(&stats),
            )?;
            Err(Failure::Quality(
                RfdError::<f64>::NotConverged { stats, last_path }.into(),
            ))
        }
        Err(e @ RfdError::Unreachable { .. }) => Err(Failure::Unreachable(e.into())),
        Err(e) => Err(input_err(e)),
    }
}

fn run_aco(a: &RouteArgs, g: &RoadGraph64) -> CmdResult {
    let mut p: AcoParams64 =
        overrides::apply(&AcoParams64::default(), &a.set).map_err(input_err)?;
    if let Some(s) = a.seed {
        p.seed = s;
    }
    let params = toml::Value::try_from(&p).map_err(input_err)?;
    match aco_solve(g, &a.origin, &a.dest, &p) {
        Ok(out) => emit(
            a,
            Some(p.seed),
            Some(params),
            true,
            Some(&out.path),
            Some(out.stats.iterations),
            true,
            &solver_stat_lines(&out.stats),
        ),
        Err(AcoError::NotConverged { stats, best }) => {
            emit(
                a,
                Some(p.seed),
                Some(params),
                false,
                best.as_ref(),
                Some(stats.iterations),
                false,
                &solver_stat_lines(&stats),
            )?;
            Err(Failure::Quality(
                AcoError::<f64>::NotConverged { stats, best }.into(),
            ))
        }
        Err(e @ AcoError::Unreachable { .. }) => Err(Failure::Unreachable(e.into())),
        Err(e) => Err(input_err(e)),
    }
}

fn run_walk(a: &RouteArgs, g: &RoadGraph64) -> CmdResult {
    let mut p: WalkParams = overrides::apply(&WalkParams::default(), &a.set).map_err(input_err)?;
    if let Some(s) = a.seed {
        p.seed = s;
    }
    let params = toml::Value::try_from(&p).map_err(input_err)?;
    let walk_lines = |s: &riverroute::baselines::WalkStats| {
        vec![
            ("walkers", s.walkers.to_string()),
            ("successes", s.successes.to_string()),
            ("distinct_nodes", s.distinct_nodes.to_string()),
            ("total_steps", s.total_steps.to_string()),
        ]
    };
    match random_walk_solve(g, &a.origin, &a.dest, &p) {
        Ok(out) => emit(
            a,
            Some(p.seed),
            Some(params),
            true,
            Some(&out.path),
            None,
            true,
            &walk_lines(&out.stats),
        ),
        Err(WalkError::NotFound { stats }) => {
            emit(
                a,
                Some(p.seed),
                Some(params),
                false,
                None,
                None,
                false,
                &walk_lines(&stats),
            )?;
            Err(Failure::Quality(WalkError::NotFound { stats }.into()))
        }
        Err(e) => Err(input_err(e)),
    }
}

fn run_dijkstra(a: &RouteArgs, g: &RoadGraph64) -> CmdResult {
    if !a.set.is_empty() {
        return Err(input_err(anyhow::anyhow!(
            "dijkstra has no tunable parameters; drop --set"
        )));
    }
    match dijkstra_shortest_path(g, &a.origin, &a.dest) {
        Ok(path) => emit(a, None, None, true, Some(&path), None, true, &[]),
        Err(e @ GraphError::Unreachable { .. }) => Err(Failure::Unreachable(e.into())),
        Err(e) => Err(input_err(e)),
    }
}
