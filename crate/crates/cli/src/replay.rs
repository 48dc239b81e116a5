//! `replay`: run a recorded sensor log through the telemetry pipeline and
//! report the resulting congestion map.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use riverroute::telemetry::{decode_reading, verify_pipeline};

use crate::route::toml_u64;
use crate::{write_output, write_stanza, CmdResult, Failure};

#[derive(Args)]
pub struct ReplayArgs {
    /// Network file supplying unit geometry.
    #[arg(long)]
    network: PathBuf,
    /// Sensor log, one record line per reading.
    #[arg(long)]
    readings: PathBuf,
    /// Tumbling window length.
    #[arg(long, default_value_t = 5000)]
    window_ms: u64,
    /// Vehicles per metre per lane at standstill.
    #[arg(long, default_value_t = 0.15)]
    jam_density: f64,
    /// Directory receiving congestion_map.csv and run_config.toml.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

pub fn run(a: &ReplayArgs) -> CmdResult {
    let net = crate::load_network(&a.network)?;
    let text = crate::read_file(&a.readings)?;
    let lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let as_of_ms = lines
        .iter()
        .filter_map(|l| decode_reading::<f64>(l).ok())
        .map(|r| r.timestamp_ms)
        .max()
        .unwrap_or(0);

    let units = crate::simulate::server_units(&net);
    let check = verify_pipeline(&lines, a.window_ms, a.jam_density, &units, as_of_ms);

    println!("as_of_ms {}", check.map.as_of_ms);
    let mut csv = String::from("unit,chi,stale,window_end_ms\n");
    for (unit, state) in &check.map.units {
        println!(
            "unit {unit} chi {} stale {} window_end_ms {}",
            state.chi, state.stale, state.window_end_ms
        );
        let _ = writeln!(csv, "{unit},{},{},{}", state.chi, state.stale, state.window_end_ms);
    }
    let c = check.counters;
    println!(
        "parsed {} malformed {} stragglers {} unknown_unit {}",
        c.parsed, c.malformed, c.stragglers, c.unknown_unit
    );
    write_output(&a.out_dir, "congestion_map.csv", &csv)?;

    let mut doc = toml::value::Table::new();
    doc.insert("command".into(), "replay".into());
    doc.insert("network".into(), a.network.display().to_string().into());
    doc.insert("readings".into(), a.readings.display().to_string().into());
    doc.insert("window_ms".into(), toml_u64(a.window_ms));
    doc.insert("jam_density".into(), a.jam_density.into());
    write_stanza(&a.out_dir, doc)?;

    if check.matches {
        Ok(())
    } else {
        for m in check.mismatches.iter().take(5) {
            eprintln!("pipeline mismatch: {m}");
        }
        Err(Failure::Quality(anyhow!(
            "telemetry pipeline diverged in {} place(s)",
            check.mismatches.len()
        )))
    }
}
