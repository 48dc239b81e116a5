//! `simulate`: run a traffic scenario and write its metric streams.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use riverroute::sim::{load_scenario, run_scenario, RouterKind};
use riverroute::telemetry::{verify_pipeline, ServerUnit};
use riverroute::{RoadNetwork64, SimConfig64};

use crate::route::toml_u64;
use crate::{input_err, overrides, write_output, write_stanza, CmdResult, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouterArg {
    Rfd,
    Aco,
    Dijkstra,
    Static,
}

impl From<RouterArg> for RouterKind {
    fn from(r: RouterArg) -> Self {
        match r {
            RouterArg::Rfd => RouterKind::Rfd,
            RouterArg::Aco => RouterKind::Aco,
            RouterArg::Dijkstra => RouterKind::Dijkstra,
            RouterArg::Static => RouterKind::Static,
        }
    }
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Network file (JSON graph with unit geometry and signals).
    #[arg(long)]
    network: PathBuf,
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the scenario's router.
    #[arg(long, value_enum)]
    router: Option<RouterArg>,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario override as key=value, repeatable
    /// (e.g. --set duration_s=600 --set rfd.drops_per_iteration=16).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory receiving vehicle_metrics.csv, network_metrics.csv and
    /// run_config.toml.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also write every sensor line to this file and verify the telemetry
    /// pipeline reproduces the stream's congestion map exactly.
    #[arg(long)]
    telemetry_log: Option<PathBuf>,
}

pub fn server_units(net: &RoadNetwork64) -> BTreeMap<String, ServerUnit<f64>> {
    (0..net.graph.edge_count())
        .map(|e| {
            let geom = net.unit(e);
            let unit = ServerUnit {
                length_m: geom.length_m,
                lanes: geom.lanes,
            };
            (net.graph.unit_id(e), unit)
        })
        .collect()
}

pub fn run(a: &SimulateArgs) -> CmdResult {
    let net = crate::load_network(&a.network)?;
    let text = crate::read_file(&a.scenario)?;
    let cfg: SimConfig64 = load_scenario(&text)
        .with_context(|| format!("scenario {}", a.scenario.display()))
        .map_err(input_err)?;
    let mut cfg: SimConfig64 = overrides::apply(&cfg, &a.set).map_err(input_err)?;
    if let Some(r) = a.router {
        cfg.router = r.into();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }

    let out = run_scenario(&net, &cfg).map_err(input_err)?;
    write_output(&a.out_dir, "vehicle_metrics.csv", &out.vehicle_csv)?;
    write_output(&a.out_dir, "network_metrics.csv", &out.network_csv)?;

    let mut doc = toml::value::Table::new();
    doc.insert("command".into(), "simulate".into());
    doc.insert("network".into(), a.network.display().to_string().into());
    doc.insert("scenario".into(), a.scenario.display().to_string().into());
    doc.insert("seed".into(), toml_u64(cfg.seed));
    doc.insert(
        "config".into(),
        toml::Value::try_from(&cfg).map_err(input_err)?,
    );
    write_stanza(&a.out_dir, doc)?;

    let s = &out.summary;
    println!("ticks {}", s.ticks);
    println!("spawned {}", s.spawned);
    println!("arrived {}", s.arrived);
    println!("stranded_on_units {}", s.stranded_on_units);
    println!("stranded_at_entry {}", s.stranded_at_entry);
    println!("censored_mean_travel_s {}", s.censored_mean_travel_s);
    println!("mean_network_chi {}", s.mean_network_chi);
    println!("router_failures {}", s.router_failures);
    println!("conservation {}", if s.conservation_ok { "ok" } else { "VIOLATED" });
    println!("capacity {}", if s.capacity_ok { "ok" } else { "VIOLATED" });

    let mut breaches: Vec<String> = Vec::new();
    if !s.conservation_ok {
        breaches.push("vehicle conservation violated".into());
    }
    if !s.capacity_ok {
        breaches.push("unit capacity violated".into());
    }

    if let Some(log_path) = &a.telemetry_log {
        if let Some(parent) = log_path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))
                    .map_err(input_err)?;
            }
        }
        let mut log = out.telemetry.join("\n");
        if !log.is_empty() {
            log.push('\n');
        }
        fs::write(log_path, &log)
            .with_context(|| format!("writing {}", log_path.display()))
            .map_err(input_err)?;

        let as_of_ms = (cfg.duration_s * 1000.0).round() as u64;
        let check = verify_pipeline(
            &out.telemetry,
            cfg.telemetry_window_ms,
            cfg.jam_density,
            &server_units(&net),
            as_of_ms,
        );
        let c = check.counters;
        println!("telemetry_lines {}", out.telemetry.len());
        println!(
            "telemetry parsed {} malformed {} stragglers {} unknown_unit {}",
            c.parsed, c.malformed, c.stragglers, c.unknown_unit
        );
        println!("pipeline {}", if check.matches { "ok" } else { "MISMATCH" });
        if !check.matches {
            for m in check.mismatches.iter().take(5) {
                eprintln!("pipeline mismatch: {m}");
            }
            breaches.push(format!(
                "telemetry pipeline diverged in {} place(s)",
                check.mismatches.len()
            ));
        }
    }

    if breaches.is_empty() {
        Ok(())
    } else {
        Err(Failure::Quality(anyhow!("{}", breaches.join("; "))))
    }
}
