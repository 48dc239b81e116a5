use super::*;
use crate::graph::GraphError;

fn net(json: &str) -> RoadNetwork<f64> {
    load_network(json.as_bytes()).unwrap()
}

/// One road, one signal at the far end.
const LINE: &str = r#"{
  "nodes": [
    {"id": "o"},
    {"id": "d", "cycleS": 60, "lostTimeS": 4, "minGreenS": 7}
  ],
  "edges": [
    {"from": "o", "to": "d", "cost": 10, "lengthM": 300, "lanes": 2}
  ]
}"#;

/// Short route through a one-car bottleneck, long clear alternative.
const FORK: &str = r#"{
  "nodes": [{"id": "a"}, {"id": "b"}, {"id": "d"}, {"id": "o"}],
  "edges": [
    {"from": "o", "to": "a", "cost": 10, "lengthM": 150, "lanes": 1},
    {"from": "a", "to": "d", "cost": 5, "lengthM": 7, "lanes": 1},
    {"from": "o", "to": "b", "cost": 10, "lengthM": 150, "lanes": 2},
    {"from": "b", "to": "d", "cost": 10, "lengthM": 150, "lanes": 2}
  ]
}"#;

#[test]
fn congestion_index_matches_hand_values() {
    assert_eq!(congestion_index(0, 150.0, 2, 0.15), 0.0);
    assert_eq!(congestion_index(9, 150.0, 2, 0.15), 0.2);
    // 45 vehicles on 150 m x 2 lanes is exactly jam density.
    assert_eq!(congestion_index(45, 150.0, 2, 0.15), 1.0);
    assert_eq!(congestion_index(90, 150.0, 2, 0.15), 1.0);
}

#[test]
fn travel_time_matches_hand_values_and_grows_with_congestion() {
    assert_eq!(travel_time(10.0, 0.0, 4.0, 4.0), 10.0);
    assert_eq!(travel_time(10.0, 0.5, 4.0, 4.0), 12.5);
    assert_eq!(travel_time(10.0, 1.0, 4.0, 4.0), 50.0);
    let mut last = 0.0;
    for i in 0..=10 {
        let tt = travel_time(10.0, i as f64 / 10.0, 4.0, 4.0);
        assert!(tt > last);
        last = tt;
    }
}

#[test]
fn network_loader_validates_geometry_and_signals() {
    let n = net(LINE);
    let e = n.graph.unit_index("o>d").unwrap();
    assert_eq!(n.unit(e).length_m, 300.0);
    assert_eq!(n.unit(e).lanes, 2);
    // freeFlowTimeS defaults to the edge cost.
    assert_eq!(n.unit(e).free_flow_time_s, 10.0);
    let d = n.graph.node_index("d").unwrap();
    let sig = n.signal(d).unwrap();
    assert_eq!((sig.cycle_s, sig.lost_time_s, sig.min_green_s), (60.0, 4.0, 7.0));
    assert!(n.signal(n.graph.node_index("o").unwrap()).is_none());

    let cases = [
        // lengthM missing.
        (
            r#"{"nodes":[{"id":"o"},{"id":"d"}],
                "edges":[{"from":"o","to":"d","cost":10,"lanes":2}]}"#,
            "lengthM",
        ),
        // lanes missing.
        (
            r#"{"nodes":[{"id":"o"},{"id":"d"}],
                "edges":[{"from":"o","to":"d","cost":10,"lengthM":300}]}"#,
            "lanes",
        ),
        // Signal on a node nothing feeds into.
        (
            r#"{"nodes":[{"id":"o","cycleS":60},{"id":"d"}],
                "edges":[{"from":"o","to":"d","cost":10,"lengthM":300,"lanes":2}]}"#,
            "approaches",
        ),
        // Cycle too short for the minimum greens.
        (
            r#"{"nodes":[{"id":"o"},{"id":"d","cycleS":5,"minGreenS":7}],
                "edges":[{"from":"o","to":"d","cost":10,"lengthM":300,"lanes":2}]}"#,
            "cannot fit",
        ),
        // Timing fields without a cycle.
        (
            r#"{"nodes":[{"id":"o"},{"id":"d","lostTimeS":4}],
                "edges":[{"from":"o","to":"d","cost":10,"lengthM":300,"lanes":2}]}"#,
            "without cycleS",
        ),
    ];
    for (json, want) in cases {
        let err = load_network::<f64>(json.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(
            matches!(err, GraphError::Validation(_)) && msg.contains(want),
            "expected '{want}' in '{msg}'"
        );
    }
}

#[test]
fn empty_demand_runs_clean() {
    let cfg = SimConfig::<f64> {
        duration_s: 30.0,
        router: RouterKind::Static,
        ..SimConfig::default()
    };
    let out = run_scenario(&net(LINE), &cfg).unwrap();
    assert_eq!(out.summary.spawned, 0);
    assert_eq!(out.summary.arrived, 0);
    assert_eq!(out.summary.mean_network_chi, 0.0);
    assert!(out.summary.conservation_ok && out.summary.capacity_ok);
    assert_eq!(out.summary.censored_mean_travel_s, 0.0);
    // One telemetry line per unit per tick.
    assert_eq!(out.telemetry.len(), 30);
    assert!(out.telemetry[0].starts_with("v1,o>d,0,0,"));
}

#[test]
fn poisson_demand_is_conserved_and_drains() {
    let cfg = SimConfig::<f64> {
        duration_s: 150.0,
        router: RouterKind::Static,
        spawns: vec![SpawnSpec {
            origin: "o".into(),
            dest: "d".into(),
            rate_per_s: 0.3,
            until_s: Some(30.0),
        }],
        seed: 4,
        ..SimConfig::default()
    };
    let out = run_scenario(&net(LINE), &cfg).unwrap();
    assert!(out.summary.spawned > 0);
    assert_eq!(out.summary.arrived, out.summary.spawned);
    assert_eq!(out.summary.stranded_on_units, 0);
    assert_eq!(out.summary.stranded_at_entry, 0);
    assert!(out.summary.conservation_ok && out.summary.capacity_ok);
    assert_eq!(out.summary.router_failures, 0);
    // Even unqueued, the 10 s road plus the signal make travel positive.
    assert!(out.summary.censored_mean_travel_s >= 10.0);
    for v in &out.vehicles {
        let arrived = v.arrived_at_s.expect("everything drained");
        assert!(arrived > v.spawned_at_s);
    }
}

#[test]
fn signal_credits_throttle_discharge() {
    // 1 veh/s arrives; 56s of green in a 60s cycle at 0.5 veh/s/lane on
    // 2 lanes discharges about 0.93 veh/s, so a queue must form and the
    // mean travel time must clearly exceed free flow.
    let cfg = SimConfig::<f64> {
        duration_s: 300.0,
        router: RouterKind::Static,
        spawns: vec![SpawnSpec {
            origin: "o".into(),
            dest: "d".into(),
            rate_per_s: 1.0,
            until_s: Some(120.0),
        }],
        seed: 7,
        ..SimConfig::default()
    };
    let out = run_scenario(&net(LINE), &cfg).unwrap();
    assert_eq!(out.summary.arrived, out.summary.spawned);
    assert!(out.summary.censored_mean_travel_s > 11.0);
    assert!(out.summary.conservation_ok && out.summary.capacity_ok);
}

#[test]
fn dynamic_router_discovers_the_detour_but_static_never_does() {
    let spawn = SpawnSpec::<f64> {
        origin: "o".into(),
        dest: "d".into(),
        rate_per_s: 1.0,
        until_s: Some(90.0),
    };
    let mk = |router| SimConfig::<f64> {
        duration_s: 200.0,
        router,
        spawns: vec![spawn.clone()],
        seed: 11,
        ..SimConfig::default()
    };
    let occupied = |out: &SimOutput<f64>, unit: &str| {
        out.telemetry.iter().any(|l| {
            let parts: Vec<&str> = l.split(',').collect();
            parts[1] == unit && parts[3] != "0"
        })
    };

    let dynamic = run_scenario(&net(FORK), &mk(RouterKind::Dijkstra)).unwrap();
    assert!(dynamic.summary.conservation_ok && dynamic.summary.capacity_ok);
    assert!(occupied(&dynamic, "o>b"), "dynamic routing should shift to the detour");

    let fixed = run_scenario(&net(FORK), &mk(RouterKind::Static)).unwrap();
    assert!(fixed.summary.conservation_ok && fixed.summary.capacity_ok);
    assert!(
        !occupied(&fixed, "o>b"),
        "the static router must keep everyone on the short route"
    );
}

#[test]
fn lane_event_grants_grace_to_overfull_units() {
    // Jam the single road, then cut it to one lane while occupied.
    let cfg = SimConfig::<f64> {
        duration_s: 120.0,
        router: RouterKind::Static,
        spawns: vec![SpawnSpec {
            origin: "o".into(),
            dest: "d".into(),
            rate_per_s: 1.5,
            until_s: Some(60.0),
        }],
        events: vec![LaneEvent {
            at_s: 40.0,
            unit: "o>d".into(),
            lanes: 1,
        }],
        seed: 2,
        ..SimConfig::default()
    };
    let out = run_scenario(&net(LINE), &cfg).unwrap();
    assert!(out.summary.conservation_ok);
    assert!(
        out.summary.capacity_ok,
        "pre-event load above the shrunk capacity is excused, not flagged"
    );
}

#[test]
fn identical_runs_are_byte_identical_and_worker_count_free() {
    let mk = |workers| SimConfig::<f64> {
        duration_s: 90.0,
        router: RouterKind::Rfd,
        spawns: vec![SpawnSpec {
            origin: "o".into(),
            dest: "d".into(),
            rate_per_s: 0.4,
            until_s: Some(45.0),
        }],
        seed: 31,
        workers,
        ..SimConfig::default()
    };
    let a = run_scenario(&net(FORK), &mk(1)).unwrap();
    let b = run_scenario(&net(FORK), &mk(1)).unwrap();
    let c = run_scenario(&net(FORK), &mk(4)).unwrap();
    for other in [&b, &c] {
        assert_eq!(a.vehicle_csv, other.vehicle_csv);
        assert_eq!(a.network_csv, other.network_csv);
        assert_eq!(a.telemetry, other.telemetry);
        assert_eq!(a.summary, other.summary);
    }
}

#[test]
fn scenario_toml_round_trips_and_rejects_unknown_keys() {
    let text = r#"
duration_s = 120.0
router = "dijkstra"
seed = 9

[[spawns]]
origin = "o"
dest = "d"
rate_per_s = 0.3
until_s = 30.0

[[events]]
at_s = 10.0
unit = "o>d"
lanes = 1

[rfd]
drops_per_iteration = 8
"#;
    let cfg: SimConfig<f64> = load_scenario(text).unwrap();
    assert_eq!(cfg.duration_s, 120.0);
    assert_eq!(cfg.router, RouterKind::Dijkstra);
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.spawns.len(), 1);
    assert_eq!(cfg.spawns[0].until_s, Some(30.0));
    assert_eq!(cfg.events[0].lanes, 1);
    assert_eq!(cfg.rfd.drops_per_iteration, 8);
    // Unnamed fields keep their defaults.
    assert_eq!(cfg.step_s, 1.0);
    assert_eq!(cfg.rfd.max_iterations, 1000);

    assert!(matches!(
        load_scenario::<f64>("duration_s = 10.0\nbogus = 1\n"),
        Err(SimError::Scenario(_))
    ));
}

#[test]
fn config_validation_rejects_bad_demand_and_events() {
    let network = net(LINE);
    let base = SimConfig::<f64>::default();

    let mut unknown = base.clone();
    unknown.spawns = vec![SpawnSpec {
        origin: "nope".into(),
        dest: "d".into(),
        rate_per_s: 0.1,
        until_s: None,
    }];
    assert!(unknown.validate(&network).is_err());

    let mut same = base.clone();
    same.spawns = vec![SpawnSpec {
        origin: "o".into(),
        dest: "o".into(),
        rate_per_s: 0.1,
        until_s: None,
    }];
    assert!(same.validate(&network).is_err());

    let mut unreachable = base.clone();
    unreachable.spawns = vec![SpawnSpec {
        origin: "d".into(),
        dest: "o".into(),
        rate_per_s: 0.1,
        until_s: None,
    }];
    assert!(unreachable.validate(&network).is_err());

    let mut bad_event = base.clone();
    bad_event.events = vec![LaneEvent {
        at_s: 5.0,
        unit: "d>o".into(),
        lanes: 1,
    }];
    assert!(bad_event.validate(&network).is_err());

    let mut zero_lanes = base.clone();
    zero_lanes.events = vec![LaneEvent {
        at_s: 5.0,
        unit: "o>d".into(),
        lanes: 0,
    }];
    assert!(zero_lanes.validate(&network).is_err());

    let mut bad_step = base;
    bad_step.step_s = 0.0;
    assert!(bad_step.validate(&network).is_err());
}
