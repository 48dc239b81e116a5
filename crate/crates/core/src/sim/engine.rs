//! The tick loop.
//!
//! Each one-step tick runs a fixed phase order: lane events, spawns,
//! signal replans, discharge, measurement, reroute. Vehicles sit in entry
//! queues until their first unit has space, then hop unit to unit; a hop
//! needs the vehicle to have finished traversing its unit (travel time is
//! fixed when it enters, from the congestion index at that moment), a
//! discharge credit when the intersection is signalized, and space
//! downstream (head-of-line blocking otherwise). All queues are FIFO and
//! every phase walks structures in index order, so a run is a pure
//! function of its inputs.

use std::collections::{HashMap, VecDeque};

use crate::baselines::aco_solve;
use crate::graph::{dijkstra_shortest_path, PathResult, RoadGraph};
use crate::rfd;
use crate::rng::{poisson_count, rng_from, substream};
use crate::scalar::Scalar;
use crate::telemetry::{encode_reading, SensorReading};

use super::{
    adjust_signal_splits, congestion_index, travel_time, RoadNetwork, RouterKind, SimConfig,
    SimError,
};

/// Per-vehicle outcome row.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleRecord<F> {
    pub id: u64,
    pub spawned_at_s: F,
    pub arrived_at_s: Option<F>,
    pub reroutes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary<F> {
    pub ticks: u64,
    pub spawned: u64,
    pub arrived: u64,
    /// Vehicles still traversing units when the run ended.
    pub stranded_on_units: u64,
    /// Vehicles still waiting to enter the network when the run ended.
    pub stranded_at_entry: u64,
    /// Mean travel time with unfinished vehicles censored at the horizon:
    /// a vehicle that never arrived contributes the time it had been in
    /// the system when the run ended.
    pub censored_mean_travel_s: F,
    /// Mean over ticks of the mean congestion index over units.
    pub mean_network_chi: F,
    pub conservation_ok: bool,
    pub capacity_ok: bool,
    /// Routing requests the configured router failed; those vehicles fell
    /// back to the exact shortest path on the same snapshot.
    pub router_failures: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput<F> {
    pub summary: SimSummary<F>,
    pub vehicles: Vec<VehicleRecord<F>>,
    /// Sensor lines, one per unit per tick, in tick-then-unit order.
    pub telemetry: Vec<String>,
    /// CSV `id,spawned_at_s,arrived_at_s,travel_s,reroutes`.
    pub vehicle_csv: String,
    /// CSV `time_s,mean_chi,vehicles_in_network`.
    pub network_csv: String,
}

struct Vehicle<F> {
    dest: usize,
    spawned_at_s: F,
    /// Edge indices from origin to dest; empty until admission.
    route: Vec<usize>,
    /// Index into `route` of the unit currently being traversed.
    leg: usize,
    /// False while still in the entry queue.
    entered: bool,
    reroutes: u32,
    arrived_at_s: Option<F>,
}

struct Engine<'a, F: Scalar> {
    net: &'a RoadNetwork<F>,
    cfg: &'a SimConfig<F>,
    step_ms: u64,
    /// Live lane counts (lane events mutate these, not the network).
    lanes: Vec<u32>,
    /// Units allowed to exceed capacity because an event shrank them.
    grace: Vec<bool>,
    /// FIFO per unit: (vehicle id, time its traversal completes).
    on_unit: Vec<VecDeque<(u64, F)>>,
    entry: Vec<VecDeque<u64>>,
    credits: Vec<F>,
    greens: Vec<Vec<F>>,
    vehicles: Vec<Vehicle<F>>,
    spawned: u64,
    arrived: u64,
    router_failures: u64,
    conservation_ok: bool,
    capacity_ok: bool,
    /// Travel-time snapshot the routers see, refreshed at reroute events.
    snapshot: RoadGraph<F>,
    generation: u64,
    route_calls: u64,
    route_cache: HashMap<(usize, usize), Option<Vec<usize>>>,
    telemetry: Vec<String>,
    network_rows: String,
    chi_mean_sum: F,
}

impl<'a, F: Scalar> Engine<'a, F> {
    fn new(net: &'a RoadNetwork<F>, cfg: &'a SimConfig<F>) -> Self {
        let g = &net.graph;
        let lanes: Vec<u32> = (0..g.edge_count()).map(|e| net.unit(e).lanes).collect();
        let free_flow: Vec<F> = (0..g.edge_count())
            .map(|e| net.unit(e).free_flow_time_s)
            .collect();
        Engine {
            net,
            cfg,
            step_ms: (cfg.step_s.as_f64() * 1000.0).round() as u64,
            lanes,
            grace: vec![false; g.edge_count()],
            on_unit: vec![VecDeque::new(); g.edge_count()],
            entry: vec![VecDeque::new(); g.node_count()],
            credits: vec![F::zero(); g.edge_count()],
            greens: (0..g.node_count())
                .map(|n| vec![F::zero(); g.in_edges(n).len()])
                .collect(),
            vehicles: Vec::new(),
            spawned: 0,
            arrived: 0,
            router_failures: 0,
            conservation_ok: true,
            capacity_ok: true,
            snapshot: g
                .with_costs(&free_flow)
                .expect("free-flow times are valid costs"),
            generation: 0,
            route_calls: 0,
            route_cache: HashMap::new(),
            telemetry: Vec::new(),
            network_rows: String::from("time_s,mean_chi,vehicles_in_network\n"),
            chi_mean_sum: F::zero(),
        }
    }

    fn capacity(&self, e: usize) -> usize {
        let cap = self.net.unit(e).length_m * F::of(self.lanes[e] as f64) * self.cfg.jam_density;
        (cap.as_f64().floor() as usize).max(1)
    }

    fn chi(&self, e: usize) -> F {
        congestion_index(
            self.on_unit[e].len() as u64,
            self.net.unit(e).length_m,
            self.lanes[e],
            self.cfg.jam_density,
        )
    }

    fn unit_travel_time(&self, e: usize) -> F {
        travel_time(
            self.net.unit(e).free_flow_time_s,
            self.chi(e),
            self.cfg.delay_alpha,
            self.cfg.delay_beta,
        )
    }

    /// Edge-index route from `from` to `dest` on the current snapshot via
    /// the configured router, memoized per snapshot generation. `None`
    /// records a router failure.
    fn route_via_router(&mut self, from: usize, dest: usize) -> Option<Vec<usize>> {
        if let Some(hit) = self.route_cache.get(&(from, dest)) {
            return hit.clone();
        }
        let from_id = self.net.graph.node_id(from).as_str().to_owned();
        let dest_id = self.net.graph.node_id(dest).as_str().to_owned();
        let seed = substream(self.cfg.seed, (1 << 32) | self.generation, self.route_calls);
        self.route_calls += 1;
        let path: Option<PathResult<F>> = match self.cfg.router {
            RouterKind::Dijkstra | RouterKind::Static => {
                dijkstra_shortest_path(&self.snapshot, &from_id, &dest_id).ok()
            }
            RouterKind::Rfd => {
                let mut p = self.cfg.rfd.clone();
                p.seed = seed;
                p.workers = self.cfg.workers;
                rfd::solve(&self.snapshot, &from_id, &dest_id, &p)
                    .ok()
                    .map(|o| o.path)
            }
            RouterKind::Aco => {
                let mut p = self.cfg.aco.clone();
                p.seed = seed;
                p.workers = self.cfg.workers;
                aco_solve(&self.snapshot, &from_id, &dest_id, &p)
                    .ok()
                    .map(|o| o.path)
            }
        };
        let route = path.map(|p| self.edges_of(&p));
        if route.is_none() {
            self.router_failures += 1;
        }
        self.route_cache.insert((from, dest), route.clone());
        route
    }

    fn edges_of(&self, path: &PathResult<F>) -> Vec<usize> {
        let g = &self.net.graph;
        path.nodes
            .windows(2)
            .map(|w| {
                let a = g.node_index(w[0].as_str()).expect("router output is on-graph");
                let b = g.node_index(w[1].as_str()).expect("router output is on-graph");
                g.edge_between(a, b).expect("router output follows edges")
            })
            .collect()
    }

    /// Router route with an exact-shortest-path fallback on the same
    /// snapshot, so a failed heuristic solve never strands a vehicle.
    fn route_for(&mut self, from: usize, dest: usize) -> Option<Vec<usize>> {
        if let Some(r) = self.route_via_router(from, dest) {
            return Some(r);
        }
        let from_id = self.net.graph.node_id(from).as_str().to_owned();
        let dest_id = self.net.graph.node_id(dest).as_str().to_owned();
        dijkstra_shortest_path(&self.snapshot, &from_id, &dest_id)
            .ok()
            .map(|p| self.edges_of(&p))
    }

    fn lane_events(&mut self, tick: u64) {
        for ev in &self.cfg.events {
            let at = (ev.at_s / self.cfg.step_s).round().as_f64() as u64;
            if at != tick {
                continue;
            }
            let e = self
                .net
                .graph
                .unit_index(&ev.unit)
                .expect("events validated against the graph");
            self.lanes[e] = ev.lanes;
            if self.on_unit[e].len() > self.capacity(e) {
                self.grace[e] = true;
            }
        }
    }

    fn spawn(&mut self, tick: u64, now: F) {
        for (si, spec) in self.cfg.spawns.iter().enumerate() {
            if let Some(until) = spec.until_s {
                if now >= until {
                    continue;
                }
            }
            let origin = self.net.graph.node_index(&spec.origin).expect("validated");
            let dest = self.net.graph.node_index(&spec.dest).expect("validated");
            let mean = (spec.rate_per_s * self.cfg.step_s).as_f64();
            let mut rng = rng_from(substream(self.cfg.seed, tick, si as u64));
            for _ in 0..poisson_count(mean, &mut rng) {
                let id = self.vehicles.len() as u64;
                self.vehicles.push(Vehicle {
                    dest,
                    spawned_at_s: now,
                    route: Vec::new(),
                    leg: 0,
                    entered: false,
                    reroutes: 0,
                    arrived_at_s: None,
                });
                self.entry[origin].push_back(id);
                self.spawned += 1;
            }
        }
    }

    fn replan_signals(&mut self, tick: u64, now: F) -> Result<(), SimError> {
        let g = &self.net.graph;
        for node in self.net.signalized_nodes().collect::<Vec<_>>() {
            let cfg = *self.net.signal(node).expect("listed as signalized");
            let cycle_ticks = ((cfg.cycle_s / self.cfg.step_s).round().as_f64() as u64).max(1);
            if tick % cycle_ticks != 0 {
                continue;
            }
            let demands: Vec<F> = g
                .in_edges(node)
                .iter()
                .map(|&e| {
                    let ready = self.on_unit[e]
                        .iter()
                        .filter(|&&(_, ready_at)| ready_at <= now)
                        .count();
                    F::of(ready as f64)
                })
                .collect();
            self.greens[node] =
                adjust_signal_splits(&demands, &cfg, g.node_id(node).as_str())?;
        }
        Ok(())
    }

    fn accrue_credits(&mut self) {
        let g = &self.net.graph;
        for node in self.net.signalized_nodes().collect::<Vec<_>>() {
            let cfg = *self.net.signal(node).expect("listed as signalized");
            for (pos, &e) in g.in_edges(node).iter().enumerate() {
                let green = self.greens[node][pos];
                let lanes = F::of(self.lanes[e] as f64);
                let rate = green / cfg.cycle_s * self.cfg.saturation_flow * lanes;
                let cap = (self.cfg.saturation_flow * lanes * green).max(F::one());
                self.credits[e] = (self.credits[e] + rate * self.cfg.step_s).min(cap);
            }
        }
    }

    /// Moves the head vehicle of `e` across its downstream intersection if
    /// it has finished traversing, the signal (if any) has a credit, and
    /// the next unit has space. Repeats until something blocks.
    fn discharge_unit(&mut self, e: usize, now: F) {
        let node = self.net.graph.edge(e).to;
        let signalized = self.net.signal(node).is_some();
        loop {
            let Some(&(id, ready_at)) = self.on_unit[e].front() else {
                break;
            };
            if ready_at > now {
                break;
            }
            if signalized && self.credits[e] < F::one() {
                break;
            }
            let v = &self.vehicles[id as usize];
            let last_leg = v.leg + 1 == v.route.len();
            if last_leg {
                debug_assert_eq!(node, v.dest, "routes end at the destination");
                self.on_unit[e].pop_front();
                if signalized {
                    self.credits[e] -= F::one();
                }
                self.vehicles[id as usize].arrived_at_s = Some(now);
                self.arrived += 1;
                continue;
            }
            let next = v.route[v.leg + 1];
            debug_assert_eq!(self.net.graph.edge(next).from, node, "route is connected");
            if self.on_unit[next].len() >= self.capacity(next) {
                break;
            }
            let tt = self.unit_travel_time(next);
            self.on_unit[e].pop_front();
            if signalized {
                self.credits[e] -= F::one();
            }
            let v = &mut self.vehicles[id as usize];
            v.leg += 1;
            self.on_unit[next].push_back((id, now + tt));
        }
    }

    fn admit_entries(&mut self, node: usize, now: F) {
        loop {
            let Some(&id) = self.entry[node].front() else {
                break;
            };
            if self.vehicles[id as usize].route.is_empty() {
                let dest = self.vehicles[id as usize].dest;
                match self.route_for(node, dest) {
                    Some(route) => {
                        debug_assert!(!route.is_empty(), "origin differs from dest");
                        self.vehicles[id as usize].route = route;
                    }
                    // Validated reachable at free flow; a snapshot keeps
                    // every edge, so the fallback cannot fail.
                    None => unreachable!("fallback router failed on a reachable pair"),
                }
            }
            let first = self.vehicles[id as usize].route[0];
            if self.on_unit[first].len() >= self.capacity(first) {
                break;
            }
            let tt = self.unit_travel_time(first);
            self.entry[node].pop_front();
            let v = &mut self.vehicles[id as usize];
            v.leg = 0;
            v.entered = true;
            self.on_unit[first].push_back((id, now + tt));
        }
    }

    fn measure(&mut self, tick: u64, now: F) {
        let g = &self.net.graph;
        let mut chi_sum = F::zero();
        let ts = tick * self.step_ms;
        for e in 0..g.edge_count() {
            let chi = self.chi(e);
            chi_sum += chi;
            let count = self.on_unit[e].len();
            if count <= self.capacity(e) {
                self.grace[e] = false;
            } else if !self.grace[e] {
                self.capacity_ok = false;
            }
            let speed = self.net.unit(e).length_m / self.unit_travel_time(e);
            self.telemetry.push(encode_reading(&SensorReading {
                unit_id: g.unit_id(e),
                timestamp_ms: ts,
                vehicle_count: count as u64,
                mean_speed_mps: speed,
            }));
        }
        let mean_chi = chi_sum / F::of(g.edge_count() as f64);
        self.chi_mean_sum += mean_chi;

        let on_units: u64 = self.on_unit.iter().map(|q| q.len() as u64).sum();
        let queued: u64 = self.entry.iter().map(|q| q.len() as u64).sum();
        if self.spawned != self.arrived + on_units + queued {
            self.conservation_ok = false;
        }
        self.network_rows.push_str(&format!(
            "{},{},{}\n",
            now,
            mean_chi,
            on_units + queued
        ));
    }

    fn reroute(&mut self) {
        let costs: Vec<F> = (0..self.net.graph.edge_count())
            .map(|e| self.unit_travel_time(e))
            .collect();
        self.snapshot = self
            .net
            .graph
            .with_costs(&costs)
            .expect("travel times are valid costs");
        self.generation += 1;
        self.route_calls = 0;
        self.route_cache.clear();
        for id in 0..self.vehicles.len() {
            let (leg, dest, entered, arrived) = {
                let v = &self.vehicles[id];
                (v.leg, v.dest, v.entered, v.arrived_at_s.is_some())
            };
            if arrived {
                continue;
            }
            if !entered {
                // Still queued at the entrance: drop any pre-assigned
                // route so admission replans on the fresh snapshot.
                self.vehicles[id].route.clear();
                continue;
            }
            let route = self.vehicles[id].route.clone();
            let from = self.net.graph.edge(route[leg]).to;
            if from == dest {
                continue;
            }
            let old_remaining: F = route[leg + 1..]
                .iter()
                .map(|&e| self.snapshot.edge(e).cost)
                .sum();
            let Some(candidate) = self.route_via_router(from, dest) else {
                continue;
            };
            let new_cost: F = candidate.iter().map(|&e| self.snapshot.edge(e).cost).sum();
            if new_cost < old_remaining {
                let v = &mut self.vehicles[id];
                v.route.truncate(leg + 1);
                v.route.extend(candidate);
                v.reroutes += 1;
            }
        }
    }

    fn finish(self, ticks: u64) -> SimOutput<F> {
        let horizon = self.cfg.duration_s;
        let mut censored_sum = F::zero();
        let mut records = Vec::with_capacity(self.vehicles.len());
        let mut vehicle_csv = String::from("id,spawned_at_s,arrived_at_s,travel_s,reroutes\n");
        for (id, v) in self.vehicles.iter().enumerate() {
            match v.arrived_at_s {
                Some(at) => {
                    censored_sum += at - v.spawned_at_s;
                    vehicle_csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        id,
                        v.spawned_at_s,
                        at,
                        at - v.spawned_at_s,
                        v.reroutes
                    ));
                }
                None => {
                    censored_sum += horizon - v.spawned_at_s;
                    vehicle_csv.push_str(&format!(
                        "{},{},,,{}\n",
                        id, v.spawned_at_s, v.reroutes
                    ));
                }
            }
            records.push(VehicleRecord {
                id: id as u64,
                spawned_at_s: v.spawned_at_s,
                arrived_at_s: v.arrived_at_s,
                reroutes: v.reroutes,
            });
        }
        let stranded_on_units: u64 = self.on_unit.iter().map(|q| q.len() as u64).sum();
        let stranded_at_entry: u64 = self.entry.iter().map(|q| q.len() as u64).sum();
        let summary = SimSummary {
            ticks,
            spawned: self.spawned,
            arrived: self.arrived,
            stranded_on_units,
            stranded_at_entry,
            censored_mean_travel_s: if self.spawned == 0 {
                F::zero()
            } else {
                censored_sum / F::of(self.spawned as f64)
            },
            mean_network_chi: self.chi_mean_sum / F::of(ticks as f64),
            conservation_ok: self.conservation_ok,
            capacity_ok: self.capacity_ok,
            router_failures: self.router_failures,
        };
        SimOutput {
            summary,
            vehicles: records,
            telemetry: self.telemetry,
            vehicle_csv,
            network_csv: self.network_rows,
        }
    }
}

/// Runs one scenario to completion.
pub fn run_scenario<F: Scalar>(
    net: &RoadNetwork<F>,
    cfg: &SimConfig<F>,
) -> Result<SimOutput<F>, SimError> {
    cfg.validate(net)?;
    let ticks = ((cfg.duration_s / cfg.step_s).round().as_f64() as u64).max(1);
    let reroute_ticks = ((cfg.reroute_every_s / cfg.step_s).round().as_f64() as u64).max(1);
    let mut eng = Engine::new(net, cfg);
    let edge_order: Vec<usize> = {
        // Approaches before entries, nodes in index order: discharge walks
        // in-edges per node so freed space is visible downstream same-tick.
        let g = &net.graph;
        (0..g.node_count())
            .flat_map(|n| g.in_edges(n).iter().copied().collect::<Vec<_>>())
            .collect()
    };
    for tick in 0..ticks {
        let now = F::of(tick as f64) * cfg.step_s;
        eng.lane_events(tick);
        eng.spawn(tick, now);
        eng.replan_signals(tick, now)?;
        eng.accrue_credits();
        for &e in &edge_order {
            eng.discharge_unit(e, now);
        }
        for node in 0..net.graph.node_count() {
            eng.admit_entries(node, now);
        }
        eng.measure(tick, now);
        if cfg.router != RouterKind::Static && tick > 0 && tick % reroute_ticks == 0 {
            eng.reroute();
        }
    }
    Ok(eng.finish(ticks))
}
