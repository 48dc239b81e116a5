//! Release gate: nine criteria covering solver quality, landscape and
//! pipeline invariants, simulator behaviour, and determinism. Each test
//! prints one verdict line (visible with `--nocapture`) and fails loudly
//! if its criterion is not met.

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use riverroute::baselines::{aco_cycle_pressure, random_walk_solve, WalkError, WalkParams};
use riverroute::graph::{dijkstra_shortest_path, random_graph, validate_path};
use riverroute::rfd::{
    extract_steepest_path, gradient_identity_gap, run_iteration, solve, Landscape,
};
use riverroute::sim::{congestion_index, load_network, load_scenario, run_scenario, RouterKind};
use riverroute::telemetry::{
    decode_reading, encode_reading, verify_pipeline, AgentAggregator, CongestionServer,
    SensorReading, ServerUnit,
};
use riverroute::{AcoParams64, PathResult64, RfdParams64, RoadGraph64, SimConfig64};

fn criterion<F: FnOnce()>(number: u32, name: &str, body: F) {
    let result = catch_unwind(AssertUnwindSafe(body));
    let verdict = if result.is_ok() { "PASS" } else { "FAIL" };
    println!("criterion {number} ({name}): {verdict}");
    if let Err(panic) = result {
        resume_unwind(panic);
    }
}

fn ids(p: &PathResult64) -> Vec<&str> {
    p.nodes.iter().map(|n| n.as_str()).collect()
}

/// Deterministic benchmark instance family: up to 20 nodes, m <= 3n,
/// integer costs 1..=10.
fn bench_graph(gseed: u64) -> (RoadGraph64, String, String) {
    let n = 2 + (gseed as usize * 7) % 19;
    let cap = n * (n - 1);
    let m = ((n - 1) + (gseed as usize * 13) % (2 * n + 2)).min(3 * n).min(cap);
    let g: RoadGraph64 = random_graph(n, m, (1, 10), gseed).unwrap();
    let origin = g.node_id(0).as_str().to_owned();
    let dest = g.node_id(n - 1).as_str().to_owned();
    (g, origin, dest)
}

fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

#[test]
fn c1_oracle_equivalence() {
    criterion(1, "oracle equivalence on random graphs", || {
        let started = Instant::now();
        let mut runs = 0u32;
        let mut valid = 0u32;
        let mut optimal = 0u32;
        for gseed in 0..50u64 {
            let (g, origin, dest) = bench_graph(gseed);
            let best = dijkstra_shortest_path(&g, &origin, &dest).unwrap().total_cost;
            for seed in 0..30u64 {
                runs += 1;
                let p = RfdParams64 { seed, ..Default::default() };
                let Ok(out) = solve(&g, &origin, &dest, &p) else {
                    continue;
                };
                assert_eq!(out.stats.invariant_violations, 0);
                if validate_path(&g, &out.path).is_ok() {
                    valid += 1;
                }
                if (out.path.total_cost - best).abs() <= 1e-9 {
                    optimal += 1;
                }
            }
        }
        assert_eq!(valid, runs, "every run must yield a valid acyclic path");
        assert!(
            optimal as f64 >= 0.9 * runs as f64,
            "optimal-cost rate too low: {optimal}/{runs}"
        );
        let elapsed = started.elapsed();
        assert!(elapsed.as_secs() < 60, "suite took {elapsed:?}");
    });
}

#[test]
fn c2_landscape_invariants() {
    criterion(2, "landscape invariants hold after every iteration", || {
        let mut violations = 0u64;
        let mut checked = 0u32;
        for gseed in 0..12u64 {
            let (g, origin, dest) = bench_graph(3 * gseed + 1);
            for seed in 0..5u64 {
                let p = RfdParams64 { seed, ..Default::default() };
                let out = solve(&g, &origin, &dest, &p).expect("benchmark instances converge");
                violations += out.stats.invariant_violations;
                assert!(out.landscape.check_invariants(&p));
                assert_eq!(out.landscape.altitude(out.landscape.destination()), 0.0);
                checked += 1;
            }
        }
        assert!(checked > 0);
        assert_eq!(violations, 0, "iteration invariant violations");
    });
}

#[test]
fn c3_blind_alley_healing() {
    criterion(3, "trap instance heals and matches the oracle", || {
        let g = RoadGraph64::from_edge_list(&[
            ("S", "T", 1.0),
            ("S", "M", 1.0),
            ("M", "D", 1.0),
            ("T", "S", 1.0),
        ])
        .unwrap();
        let oracle = dijkstra_shortest_path(&g, "S", "D").unwrap();
        assert_eq!(ids(&oracle), ["S", "M", "D"]);
        let trap = g.node_index("T").unwrap();
        for seed in 0..30u64 {
            let p = RfdParams64 { seed, ..Default::default() };
            let out = solve(&g, "S", "D", &p).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert_eq!(ids(&out.path), ids(&oracle), "seed {seed}");
            assert_eq!(out.stats.invariant_violations, 0);
            // Healing bound at the trap node: never left below its lowest
            // neighbour by more than the tolerance, whether or not any
            // sediment was dropped there.
            if let Some(gap) = out.deposit_gaps.get(&trap) {
                assert!(*gap >= -1e-9, "seed {seed}: deposit gap {gap}");
            }
            let lowest = g
                .out_edges(trap)
                .iter()
                .map(|&e| out.landscape.altitude(g.edge(e).to))
                .fold(f64::INFINITY, f64::min);
            assert!(
                out.landscape.altitude(trap) >= lowest - 1e-9,
                "seed {seed}: trap sits below its lowest neighbour"
            );
        }
    });
}

#[test]
fn c4_shortcut_preference() {
    criterion(4, "carved routes yield to a cheaper shortcut", || {
        let chain = RoadGraph64::from_edge_list(&[
            ("A", "B", 1.0),
            ("B", "C", 1.0),
            ("C", "D", 1.0),
        ])
        .unwrap();
        let shocked = RoadGraph64::from_edge_list(&[
            ("A", "B", 1.0),
            ("B", "C", 1.0),
            ("C", "D", 1.0),
            ("A", "D", 1.0),
        ])
        .unwrap();
        // Same node set, so the sorted index space is shared and the
        // landscape carries over.
        for node in ["A", "B", "C", "D"] {
            assert_eq!(chain.node_index(node), shocked.node_index(node));
        }
        let origin = chain.node_index("A").unwrap();
        let dest = chain.node_index("D").unwrap();

        let mut switched = 0u32;
        for seed in 0..30u64 {
            let p = RfdParams64 { seed, ..Default::default() };
            let mut l = Landscape::new(chain.node_count(), dest, &p);
            for iteration in 0..50u32 {
                run_iteration(&chain, &mut l, origin, &p, iteration);
            }
            let settled = extract_steepest_path(&chain, &l, origin, &p)
                .unwrap_or_else(|e| panic!("seed {seed}: no settled route: {e}"));
            assert_eq!(ids(&settled), ["A", "B", "C", "D"], "seed {seed}");
            assert!(gradient_identity_gap(&chain, &l, &settled) <= 1e-9);

            let mut ok = false;
            for iteration in 50..250u32 {
                run_iteration(&shocked, &mut l, origin, &p, iteration);
                if let Ok(path) = extract_steepest_path(&shocked, &l, origin, &p) {
                    assert!(
                        gradient_identity_gap(&shocked, &l, &path) <= 1e-9,
                        "seed {seed} iteration {iteration}"
                    );
                    if ids(&path) == ["A", "D"] {
                        ok = true;
                        break;
                    }
                }
            }
            switched += u32::from(ok);
        }
        assert!(switched >= 27, "switched {switched}/30");
    });
}

#[test]
fn c5_cycle_contrast() {
    criterion(5, "back edge pressures ants but never extracted paths", || {
        let g = RoadGraph64::from_edge_list(&[
            ("S", "M", 1.0),
            ("M", "D", 1.0),
            ("S", "D", 3.0),
            ("M", "S", 1.0),
        ])
        .unwrap();
        let mut repeats = 0u32;
        for seed in 0..5u64 {
            let ap = AcoParams64 {
                ants: 10,
                max_iterations: 100,
                seed,
                ..Default::default()
            };
            let pressure = aco_cycle_pressure(&g, "S", "D", &ap).unwrap();
            assert_eq!(pressure.walks, 1000);
            assert!(
                pressure.fraction() > 0.0,
                "seed {seed}: no tabu-free walk revisited a node"
            );

            let out = solve(&g, "S", "D", &RfdParams64 { seed, ..Default::default() }).unwrap();
            let mut seen = HashSet::new();
            if !out.path.nodes.iter().all(|n| seen.insert(n.as_str())) {
                repeats += 1;
            }
        }
        let repeat_fraction = repeats as f64 / 5.0;
        assert_eq!(repeat_fraction, 0.0);
    });
}

#[test]
fn c6_parallel_walk_coverage() {
    criterion(6, "walker ensembles cover at least as much as one walker", || {
        let mut wins = 0u32;
        for seed in 0..100u64 {
            let g: RoadGraph64 = random_graph(20, 50, (1, 10), 1000 + seed).unwrap();
            let origin = g.node_id(0).as_str().to_owned();
            let dest = g.node_id(19).as_str().to_owned();
            let coverage = |walkers: usize, max_steps: usize| {
                let p = WalkParams {
                    walkers,
                    max_steps: Some(max_steps),
                    seed,
                    workers: 1,
                };
                match random_walk_solve(&g, &origin, &dest, &p) {
                    Ok(out) => out.stats.distinct_nodes,
                    Err(WalkError::NotFound { stats }) => stats.distinct_nodes,
                    Err(e) => panic!("seed {seed}: {e}"),
                }
            };
            if coverage(8, 100) >= coverage(1, 800) {
                wins += 1;
            }
        }
        assert!(wins >= 95, "ensemble coverage won only {wins}/100 seeds");
    });
}

#[test]
fn c7_simulator_properties() {
    criterion(7, "conservation, drain, determinism, shock benefit", || {
        let net = load_network(
            std::fs::File::open(data_file("grid3x3.network.json")).unwrap(),
        )
        .unwrap();
        let base: SimConfig64 =
            load_scenario(&std::fs::read_to_string(data_file("grid_shock.scenario.toml")).unwrap())
                .unwrap();

        // Zero demand: nothing spawns, nothing lingers.
        let zero = SimConfig64 {
            spawns: Vec::new(),
            events: Vec::new(),
            duration_s: 120.0,
            ..base.clone()
        };
        let drained = run_scenario(&net, &zero).unwrap();
        assert_eq!(drained.summary.spawned, 0);
        assert_eq!(drained.summary.arrived, 0);
        assert_eq!(drained.summary.stranded_on_units, 0);
        assert_eq!(drained.summary.stranded_at_entry, 0);
        assert!(drained.summary.conservation_ok);

        // Same seed, same bytes.
        let first = run_scenario(&net, &base).unwrap();
        let second = run_scenario(&net, &base).unwrap();
        assert_eq!(first.vehicle_csv, second.vehicle_csv);
        assert_eq!(first.network_csv, second.network_csv);
        assert_eq!(first.telemetry, second.telemetry);

        // Shock experiment: the adaptive router must not lose the seed
        // majority against the frozen free-flow router.
        let mut wins = 0u32;
        for seed in 0..20u64 {
            let run = |router: RouterKind| {
                let cfg = SimConfig64 {
                    seed,
                    router,
                    ..base.clone()
                };
                let out = run_scenario(&net, &cfg).unwrap();
                assert!(out.summary.conservation_ok, "seed {seed} {router:?}");
                assert!(out.summary.capacity_ok, "seed {seed} {router:?}");
                assert_eq!(out.summary.stranded_on_units, 0, "seed {seed} {router:?}");
                assert_eq!(out.summary.stranded_at_entry, 0, "seed {seed} {router:?}");
                out.summary.censored_mean_travel_s
            };
            if run(RouterKind::Rfd) <= run(RouterKind::Static) {
                wins += 1;
            }
        }
        assert!(wins >= 16, "adaptive router won only {wins}/20 seeds");
    });
}

#[test]
fn c8_telemetry_pipeline() {
    criterion(8, "codec identity, pipeline equality, garbage tolerance", || {
        // Round-trip identity over randomized readings, bit for bit.
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        for _ in 0..10_000 {
            let reading = SensorReading {
                unit_id: format!("n{}>n{}", rng.gen_range(0..30), rng.gen_range(30..60)),
                timestamp_ms: rng.gen(),
                vehicle_count: rng.gen(),
                mean_speed_mps: rng.gen::<f64>() * 10f64.powi(rng.gen_range(-3..6)),
            };
            let back: SensorReading<f64> = decode_reading(&encode_reading(&reading)).unwrap();
            assert_eq!(back, reading);
            assert_eq!(back.mean_speed_mps.to_bits(), reading.mean_speed_mps.to_bits());
        }

        // Lossless in-order delivery reproduces the ground truth exactly at
        // every closed window.
        let window_ms = 5_000u64;
        let jam = 0.15f64;
        let unit_names = ["a>b", "b>c", "c>a"];
        let units: BTreeMap<String, ServerUnit<f64>> = unit_names
            .iter()
            .map(|&u| {
                (
                    u.to_owned(),
                    ServerUnit {
                        length_m: 120.0,
                        lanes: 2,
                    },
                )
            })
            .collect();
        let ticks = 45u64;
        let mut counts: BTreeMap<(&str, u64), u64> = BTreeMap::new();
        let mut lines = Vec::new();
        for t in 0..ticks {
            for &u in &unit_names {
                let c = rng.gen_range(0..=36);
                counts.insert((u, t), c);
                lines.push(encode_reading(&SensorReading {
                    unit_id: u.to_owned(),
                    timestamp_ms: t * 1_000,
                    vehicle_count: c,
                    mean_speed_mps: 10.0,
                }));
            }
        }
        let expected_mean = |u: &str, w: u64| {
            let sum: u64 = (w * 5..w * 5 + 5).map(|t| counts[&(u, t)]).sum();
            sum as f64 / 5.0
        };
        let mut agent = AgentAggregator::<f64>::new(window_ms);
        let mut server = CongestionServer::new(jam, units.clone());
        let mut closed = 0u32;
        for line in &lines {
            for report in agent.push_line(line) {
                let w = report.window_start_ms / window_ms;
                let want = expected_mean(&report.unit_id, w);
                assert_eq!(report.mean_count, want, "unit {} window {w}", report.unit_id);
                server.ingest(&report);
                let map = server.map(report.window_end_ms);
                let geom = &units[&report.unit_id];
                let truth = congestion_index(
                    report.mean_count.round() as u64,
                    geom.length_m,
                    geom.lanes,
                    jam,
                );
                let got = map.units[&report.unit_id].chi;
                assert_eq!(got.to_bits(), truth.to_bits());
                closed += 1;
            }
        }
        assert!(closed > 0, "no window ever closed");

        // Garbage injection: counters move, congestion does not.
        let as_of = ticks * 1_000;
        let clean = verify_pipeline(&lines, window_ms, jam, &units, as_of);
        assert!(clean.matches);
        assert_eq!(clean.counters.malformed, 0);
        let mut dirty_lines = Vec::new();
        let mut injected = 0u64;
        for (i, line) in lines.iter().enumerate() {
            dirty_lines.push(line.clone());
            if i % 10 == 9 {
                dirty_lines.push(format!("garbage <<{i}>> not,a,reading"));
                injected += 1;
            }
        }
        let dirty = verify_pipeline(&dirty_lines, window_ms, jam, &units, as_of);
        assert!(dirty.matches);
        assert_eq!(dirty.counters.malformed, injected);
        assert_eq!(dirty.counters.parsed, clean.counters.parsed);
        assert_eq!(dirty.counters.stragglers, clean.counters.stragglers);
        assert_eq!(dirty.map, clean.map);
    });
}

#[test]
fn c9_worker_count_determinism() {
    criterion(9, "bit-identical results at any worker count", || {
        let g: RoadGraph64 = random_graph(16, 40, (1, 10), 9).unwrap();
        let origin = g.node_id(0).as_str().to_owned();
        let dest = g.node_id(15).as_str().to_owned();

        let rfd = |workers: usize| {
            solve(
                &g,
                &origin,
                &dest,
                &RfdParams64 {
                    seed: 17,
                    workers,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let (a, b) = (rfd(1), rfd(4));
        assert_eq!(a.path, b.path);
        assert_eq!(a.stats, b.stats);
        assert_eq!(a.landscape.altitudes().len(), b.landscape.altitudes().len());
        for (x, y) in a.landscape.altitudes().iter().zip(b.landscape.altitudes()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.deposit_gaps.len(), b.deposit_gaps.len());
        for ((ka, va), (kb, vb)) in a.deposit_gaps.iter().zip(&b.deposit_gaps) {
            assert_eq!(ka, kb);
            assert_eq!(va.to_bits(), vb.to_bits());
        }

        let aco = |workers: usize| {
            riverroute::baselines::aco_solve(
                &g,
                &origin,
                &dest,
                &AcoParams64 {
                    seed: 17,
                    workers,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let (a, b) = (aco(1), aco(4));
        assert_eq!(a.path, b.path);
        assert_eq!(a.stats, b.stats);
        for (x, y) in a.pheromones.levels().iter().zip(b.pheromones.levels()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }

        let walk = |workers: usize| {
            random_walk_solve(
                &g,
                &origin,
                &dest,
                &WalkParams {
                    seed: 17,
                    workers,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let (a, b) = (walk(1), walk(4));
        assert_eq!(a.path, b.path);
        assert_eq!(a.stats, b.stats);

        let net = load_network(
            std::fs::File::open(data_file("grid3x3.network.json")).unwrap(),
        )
        .unwrap();
        let base: SimConfig64 =
            load_scenario(&std::fs::read_to_string(data_file("grid_shock.scenario.toml")).unwrap())
                .unwrap();
        let sim = |workers: usize| {
            run_scenario(
                &net,
                &SimConfig64 {
                    workers,
                    ..base.clone()
                },
            )
            .unwrap()
        };
        let (a, b) = (sim(1), sim(4));
        assert_eq!(a.vehicle_csv, b.vehicle_csv);
        assert_eq!(a.network_csv, b.network_csv);
        assert_eq!(a.telemetry, b.telemetry);
    });
}
