//! `compare`: repeated seeded trials of each solver on one instance,
//! scored against the exact oracle.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use clap::Args;
use serde::{Deserialize, Serialize};
use riverroute::baselines::{
    aco_cycle_pressure, aco_solve, random_walk_solve, AcoError, WalkError, WalkParams,
};
use riverroute::graph::{dijkstra_shortest_path, random_graph, GraphError};
use riverroute::rfd::{solve, RfdError};
use riverroute::{AcoParams64, RfdParams64, RoadGraph64};

use crate::route::{toml_u64, Algo};
use crate::{input_err, overrides, write_output, write_stanza, CmdResult, Failure};

/// Cost range handed to `random:` instances; matches the benchmark graphs
/// the crate is validated against.
const RANDOM_COSTS: (u32, u32) = (1, 10);

#[derive(Args)]
pub struct CompareArgs {
    /// Graph file, or `random:<nodes>,<edges>,<seed>` for a generated
    /// instance (integer costs 1..=10).
    #[arg(long)]
    graph: String,
    /// Comma-separated subset of rfd,aco,walk,dijkstra.
    #[arg(long, value_delimiter = ',', required = true)]
    algos: Vec<Algo>,
    /// Trials per algorithm.
    #[arg(long, default_value_t = 1)]
    trials: u32,
    /// Base seed; trial t runs every solver with seed S0 + t.
    #[arg(long = "seeds", value_name = "S0", default_value_t = 0)]
    seeds: u64,
    /// Origin node id. Required for graph files; random instances default
    /// to their first generated node.
    #[arg(long)]
    origin: Option<String>,
    /// Destination node id. Required for graph files; random instances
    /// default to their last generated node.
    #[arg(long)]
    dest: Option<String>,
    /// Parameter override as key=value with keys qualified by solver,
    /// repeatable (e.g. --set rfd.drops_per_iteration=64).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory receiving compare.csv and run_config.toml.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// All tunable solver parameters under one override namespace.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ParamBundle {
    rfd: RfdParams64,
    aco: AcoParams64,
    walk: WalkParams,
}

fn resolve_graph(spec: &str) -> Result<RoadGraph64, Failure> {
    let Some(rest) = spec.strip_prefix("random:") else {
        return crate::load_graph(Path::new(spec));
    };
    let parts: Vec<&str> = rest.split(',').collect();
    let [n, m, seed] = parts[..] else {
        return Err(input_err(anyhow!(
            "random graph spec '{spec}' is not random:<nodes>,<edges>,<seed>"
        )));
    };
    let parse = |what: &str, s: &str| -> Result<u64, Failure> {
        s.parse()
            .map_err(|_| input_err(anyhow!("bad {what} '{s}' in '{spec}'")))
    };
    let n = parse("node count", n)? as usize;
    let m = parse("edge count", m)? as usize;
    let seed = parse("seed", seed)?;
    random_graph(n, m, RANDOM_COSTS, seed).map_err(input_err)
}

/// One CSV row; empty strings mark fields an algorithm does not produce.
struct Row {
    success: bool,
    cost: Option<f64>,
    iterations: Option<u32>,
    cycle_pressure: Option<f64>,
    coverage: Option<u64>,
}

fn trial_row(
    g: &RoadGraph64,
    algo: Algo,
    origin: &str,
    dest: &str,
    seed: u64,
    bundle: &ParamBundle,
    optimal: f64,
) -> Result<Row, Failure> {
    match algo {
        Algo::Rfd => {
            let p = RfdParams64 {
                seed,
                ..bundle.rfd.clone()
            };
            match solve(g, origin, dest, &p) {
                Ok(out) => Ok(Row {
                    success: true,
                    cost: Some(out.path.total_cost),
                    iterations: Some(out.stats.iterations),
                    cycle_pressure: None,
                    coverage: None,
                }),
                Err(RfdError::NotConverged { stats, last_path }) => Ok(Row {
                    success: false,
                    cost: last_path.map(|p| p.total_cost),
                    iterations: Some(stats.iterations),
                    cycle_pressure: None,
                    coverage: None,
                }),
                Err(e) => Err(input_err(e)),
            }
        }
        Algo::Aco => {
            let p = AcoParams64 {
                seed,
                ..bundle.aco.clone()
            };
            let pressure = aco_cycle_pressure(g, origin, dest, &p)
                .map_err(input_err)?
                .fraction();
            match aco_solve(g, origin, dest, &p) {
                Ok(out) => Ok(Row {
                    success: true,
                    cost: Some(out.path.total_cost),
                    iterations: Some(out.stats.iterations),
                    cycle_pressure: Some(pressure),
                    coverage: None,
                }),
                Err(AcoError::NotConverged { stats, best }) => Ok(Row {
                    success: false,
                    cost: best.map(|p| p.total_cost),
                    iterations: Some(stats.iterations),
                    cycle_pressure: Some(pressure),
                    coverage: None,
                }),
                Err(e) => Err(input_err(e)),
            }
        }
        Algo::Walk => {
            let p = WalkParams {
                seed,
                ..bundle.walk
            };
            match random_walk_solve(g, origin, dest, &p) {
                Ok(out) => Ok(Row {
                    success: true,
                    cost: Some(out.path.total_cost),
                    iterations: None,
                    cycle_pressure: None,
                    coverage: Some(out.stats.distinct_nodes),
                }),
                Err(WalkError::NotFound { stats }) => Ok(Row {
                    success: false,
                    cost: None,
                    iterations: None,
                    cycle_pressure: None,
                    coverage: Some(stats.distinct_nodes),
                }),
                Err(e) => Err(input_err(e)),
            }
        }
        Algo::Dijkstra => Ok(Row {
            success: true,
            cost: Some(optimal),
            iterations: None,
            cycle_pressure: None,
            coverage: None,
        }),
    }
}

pub fn run(a: &CompareArgs) -> CmdResult {
    let g = resolve_graph(&a.graph)?;
    // Generated instances guarantee every node is reachable from the first
    // generated id, so a default endpoint pair exists; files get no such
    // promise and must name their endpoints.
    let generated = a.graph.starts_with("random:");
    let endpoint = |given: &Option<String>, fallback: usize, flag: &str| match given {
        Some(id) => Ok(id.clone()),
        None if generated => Ok(g.node_id(fallback).as_str().to_owned()),
        None => Err(input_err(anyhow!("--{flag} is required with a graph file"))),
    };
    let origin = endpoint(&a.origin, 0, "origin")?;
    let dest = endpoint(&a.dest, g.node_count() - 1, "dest")?;
    if a.trials == 0 {
        return Err(input_err(anyhow!("--trials must be at least 1")));
    }
    let bundle: ParamBundle =
        overrides::apply(&ParamBundle::default(), &a.set).map_err(input_err)?;
    let optimal = match dijkstra_shortest_path(&g, &origin, &dest) {
        Ok(p) => p.total_cost,
        Err(e @ GraphError::Unreachable { .. }) => return Err(Failure::Unreachable(e.into())),
        Err(e) => return Err(input_err(e)),
    };

    let mut csv =
        String::from("algo,trial,seed,success,cost,optimal_cost,gap,iterations,cycle_pressure,coverage\n");
    let mut ok = vec![0u32; a.algos.len()];
    let mut hit = vec![0u32; a.algos.len()];
    let mut gap_sum = vec![0.0f64; a.algos.len()];
    for trial in 0..a.trials {
        let seed = a.seeds.wrapping_add(trial as u64);
        for (k, &algo) in a.algos.iter().enumerate() {
            let row = trial_row(&g, algo, &origin, &dest, seed, &bundle, optimal)?;
            let gap = row.cost.map(|c| c - optimal);
            if row.success {
                ok[k] += 1;
                let gap = gap.expect("successful rows carry a cost");
                gap_sum[k] += gap;
                if gap.abs() <= 1e-9 {
                    hit[k] += 1;
                }
            }
            let opt = |v: Option<String>| v.unwrap_or_default();
            let _ = writeln!(
                csv,
                "{},{trial},{seed},{},{},{optimal},{},{},{},{}",
                algo.name(),
                row.success,
                opt(row.cost.map(|v| v.to_string())),
                opt(gap.map(|v| v.to_string())),
                opt(row.iterations.map(|v| v.to_string())),
                opt(row.cycle_pressure.map(|v| v.to_string())),
                opt(row.coverage.map(|v| v.to_string())),
            );
        }
    }
    write_output(&a.out_dir, "compare.csv", &csv)?;

    println!("instance {} -> {} optimal {optimal}", origin, dest);
    for (k, &algo) in a.algos.iter().enumerate() {
        let mean_gap = if ok[k] > 0 {
            gap_sum[k] / ok[k] as f64
        } else {
            f64::NAN
        };
        println!(
            "{} trials {} ok {} optimal {} mean_gap {mean_gap}",
            algo.name(),
            a.trials,
            ok[k],
            hit[k],
        );
    }

    let mut doc = toml::value::Table::new();
    doc.insert("command".into(), "compare".into());
    doc.insert("graph".into(), a.graph.clone().into());
    doc.insert("origin".into(), origin.into());
    doc.insert("dest".into(), dest.into());
    doc.insert(
        "algos".into(),
        toml::Value::Array(a.algos.iter().map(|x| x.name().into()).collect()),
    );
    doc.insert("trials".into(), (a.trials as i64).into());
    doc.insert("seeds".into(), toml_u64(a.seeds));
    doc.insert(
        "params".into(),
        toml::Value::try_from(&bundle).map_err(input_err)?,
    );
    write_stanza(&a.out_dir, doc)
}
