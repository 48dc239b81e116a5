use super::*;

fn g1() -> RoadGraph<f64> {
    RoadGraph::from_edge_list(&[("S", "M", 1.0), ("M", "D", 1.0), ("S", "D", 3.0)]).unwrap()
}

#[test]
fn loads_three_node_file() {
    let text = r#"{
        "nodes": [{"id": "S"}, {"id": "M"}, {"id": "D"}],
        "edges": [
            {"from": "S", "to": "M", "cost": 1},
            {"from": "M", "to": "D", "cost": 1},
            {"from": "S", "to": "D", "cost": 3}
        ]
    }"#;
    let g: RoadGraph<f64> = RoadGraph::from_json_str(text).unwrap();
    assert_eq!(g.node_count(), 3);
    assert_eq!(g.edge_count(), 3);
    assert_eq!(g, g1());
}

#[test]
fn rejects_self_loop() {
    let err = RoadGraph::<f64>::from_edge_list(&[("A", "A", 1.0)]).unwrap_err();
    assert!(matches!(err, GraphError::Validation(_)), "{err}");
}

#[test]
fn rejects_nonpositive_cost() {
    for bad in [0.0, -1.0] {
        let err = RoadGraph::<f64>::from_edge_list(&[("A", "B", bad)]).unwrap_err();
        assert!(matches!(err, GraphError::Validation(_)), "{err}");
    }
}

#[test]
fn rejects_parallel_edge() {
    let err = RoadGraph::<f64>::from_edge_list(&[("A", "B", 1.0), ("A", "B", 2.0)]).unwrap_err();
    assert!(matches!(err, GraphError::Validation(_)), "{err}");
}

#[test]
fn rejects_unknown_endpoint() {
    let nodes = vec![NodeId::new("A").unwrap()];
    let edges = vec![(NodeId::new("A").unwrap(), NodeId::new("B").unwrap(), 1.0f64)];
    let err = RoadGraph::new(nodes, edges).unwrap_err();
    assert!(matches!(err, GraphError::Validation(_)), "{err}");
}

#[test]
fn rejects_bad_node_ids() {
    assert!(NodeId::new("").is_err());
    assert!(NodeId::new("a".repeat(65)).is_err());
    assert!(NodeId::new("a,b").is_err());
    assert!(NodeId::new("a>b").is_err());
    assert!(NodeId::new("a b").is_err());
    assert!(NodeId::new("héllo").is_err());
    assert!(NodeId::new("a".repeat(64)).is_ok());
    assert!(NodeId::new("x-1_2.3").is_ok());
}

#[test]
fn rejects_malformed_json() {
    let err = RoadGraph::<f64>::from_json_str("{not json").unwrap_err();
    assert!(matches!(err, GraphError::Parse(_)), "{err}");
}

#[test]
fn oracle_takes_cheap_detour_over_direct_edge() {
    let p = dijkstra_shortest_path(&g1(), "S", "D").unwrap();
    assert_eq!(p.arrow_string(), "S -> M -> D");
    assert_eq!(p.total_cost, 2.0);
    validate_path(&g1(), &p).unwrap();
}

#[test]
fn oracle_origin_equals_dest() {
    let p = dijkstra_shortest_path(&g1(), "S", "S").unwrap();
    assert_eq!(p.arrow_string(), "S");
    assert_eq!(p.total_cost, 0.0);
}

#[test]
fn oracle_reports_unreachable() {
    let g = RoadGraph::<f64>::from_edge_list(&[("A", "B", 1.0), ("C", "B", 1.0)]).unwrap();
    let err = dijkstra_shortest_path(&g, "A", "C").unwrap_err();
    assert!(matches!(err, GraphError::Unreachable { .. }), "{err}");
}

#[test]
fn oracle_reports_unknown_node() {
    let err = dijkstra_shortest_path(&g1(), "S", "Z").unwrap_err();
    assert!(matches!(err, GraphError::UnknownNode(_)), "{err}");
}

#[test]
fn oracle_breaks_cost_ties_lexicographically() {
    let g = RoadGraph::<f64>::from_edge_list(&[
        ("S", "B", 1.0),
        ("S", "A", 1.0),
        ("A", "D", 1.0),
        ("B", "D", 1.0),
    ])
    .unwrap();
    let p = dijkstra_shortest_path(&g, "S", "D").unwrap();
    assert_eq!(p.arrow_string(), "S -> A -> D");
    assert_eq!(p.total_cost, 2.0);
}

#[test]
fn generator_is_deterministic_and_reachable() {
    let a: RoadGraph<f64> = random_graph(20, 60, (1, 10), 99).unwrap();
    let b: RoadGraph<f64> = random_graph(20, 60, (1, 10), 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.node_count(), 20);
    assert_eq!(a.edge_count(), 60);
    let head = a.node_id(0).as_str().to_owned();
    assert_eq!(head, "n00");
    for idx in 0..a.node_count() {
        let dest = a.node_id(idx).as_str().to_owned();
        dijkstra_shortest_path(&a, &head, &dest).unwrap();
    }
}

#[test]
fn generator_seeds_differ() {
    let a: RoadGraph<f64> = random_graph(10, 20, (1, 10), 1).unwrap();
    let b: RoadGraph<f64> = random_graph(10, 20, (1, 10), 2).unwrap();
    assert_ne!(a, b);
}

#[test]
fn generator_rejects_infeasible_counts() {
    assert!(matches!(
        random_graph::<f64>(1, 0, (1, 10), 0).unwrap_err(),
        GraphError::InfeasibleParams(_)
    ));
    assert!(matches!(
        random_graph::<f64>(5, 3, (1, 10), 0).unwrap_err(),
        GraphError::InfeasibleParams(_)
    ));
    assert!(matches!(
        random_graph::<f64>(5, 21, (1, 10), 0).unwrap_err(),
        GraphError::InfeasibleParams(_)
    ));
    assert!(matches!(
        random_graph::<f64>(5, 10, (0, 10), 0).unwrap_err(),
        GraphError::InfeasibleParams(_)
    ));
}

#[test]
fn generator_can_fill_the_dense_end() {
    let g: RoadGraph<f64> = random_graph(5, 20, (1, 3), 4).unwrap();
    assert_eq!(g.edge_count(), 20);
}

#[test]
fn json_round_trip_is_exact() {
    let g: RoadGraph<f64> = random_graph(12, 30, (1, 10), 7).unwrap();
    let text = g.to_json_string();
    let back: RoadGraph<f64> = RoadGraph::from_json_str(&text).unwrap();
    assert_eq!(g, back);
}

#[test]
fn validator_rejects_wrong_cost_missing_edge_and_repeats() {
    let g = g1();
    let ids = |names: &[&str]| -> Vec<NodeId> {
        names.iter().map(|n| NodeId::new(*n).unwrap()).collect()
    };
    let wrong_cost = PathResult {
        nodes: ids(&["S", "M", "D"]),
        total_cost: 3.0,
    };
    assert!(validate_path(&g, &wrong_cost).is_err());
    let missing_edge = PathResult {
        nodes: ids(&["M", "S"]),
        total_cost: 1.0,
    };
    assert!(validate_path(&g, &missing_edge).is_err());
    let empty = PathResult {
        nodes: vec![],
        total_cost: 0.0,
    };
    assert!(validate_path(&g, &empty).is_err());
    let g_cycle =
        RoadGraph::<f64>::from_edge_list(&[("A", "B", 1.0), ("B", "A", 1.0)]).unwrap();
    let repeated = PathResult {
        nodes: ids(&["A", "B", "A"]),
        total_cost: 2.0,
    };
    assert!(validate_path(&g_cycle, &repeated).is_err());
}

#[test]
fn unit_ids_round_trip() {
    let g = g1();
    let e = g.unit_index("S>M").unwrap();
    assert_eq!(g.unit_id(e), "S>M");
    assert_eq!(g.edge(e).cost, 1.0);
    assert!(g.unit_index("M>S").is_none());
    assert!(g.unit_index("nonsense").is_none());
}

#[test]
fn with_costs_replaces_in_edge_order() {
    let g = g1();
    let costs: Vec<f64> = g.edges().map(|e| e.cost * 2.0).collect();
    let g2 = g.with_costs(&costs).unwrap();
    let p = dijkstra_shortest_path(&g2, "S", "D").unwrap();
    assert_eq!(p.total_cost, 4.0);
    assert!(g.with_costs(&costs[..1]).is_err());
    assert!(g.with_costs(&vec![0.0; g.edge_count()]).is_err());
}

#[test]
fn f32_instantiation_works() {
    let g: RoadGraph<f32> =
        RoadGraph::from_edge_list(&[("S", "M", 1.0), ("M", "D", 1.0), ("S", "D", 3.0)]).unwrap();
    let p = dijkstra_shortest_path(&g, "S", "D").unwrap();
    assert_eq!(p.total_cost, 2.0f32);
}
