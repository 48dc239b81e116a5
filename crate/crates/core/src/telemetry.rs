//! Sensor record codec and the two-stage aggregation pipeline.
//!
//! Each road unit (a directed edge, id `from>to`) emits one reading per
//! tick as a `v1` CSV line. The agent stage groups readings into fixed
//! tumbling windows keyed by the unit and closes a window two window
//! lengths behind the watermark (the highest timestamp seen), so one full
//! window of out-of-order arrival is tolerated; anything later is counted
//! as a straggler and dropped. The server stage keeps the latest closed
//! window per unit and turns its rounded mean count into a congestion
//! index using the unit's geometry. [`verify_pipeline`] replays a log
//! through the incremental path and through a direct batch recompute and
//! demands exactly equal results.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::NodeId;
use crate::scalar::Scalar;
use crate::sim::congestion_index;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TelemetryError {
    #[error("unsupported record version '{0}'")]
    Version(String),
    #[error("expected 5 comma-separated fields, got {0}")]
    Fields(usize),
    #[error("bad unit id '{0}'")]
    Unit(String),
    #[error("bad numeric field '{0}'")]
    Number(String),
    #[error("speed '{0}' must be finite and non-negative")]
    Speed(String),
}

/// One sensor sample: occupancy and mean speed of a unit at an instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorReading<F> {
    pub unit_id: String,
    pub timestamp_ms: u64,
    pub vehicle_count: u64,
    pub mean_speed_mps: F,
}

/// Formats a reading as a `v1` line. The speed uses the scalar's shortest
/// round-tripping decimal form, so decoding restores it bit for bit.
pub fn encode_reading<F: Scalar>(r: &SensorReading<F>) -> String {
    format!(
        "v1,{},{},{},{}",
        r.unit_id, r.timestamp_ms, r.vehicle_count, r.mean_speed_mps
    )
}

fn valid_unit(unit: &str) -> bool {
    match unit.split_once('>') {
        Some((from, to)) => NodeId::new(from).is_ok() && NodeId::new(to).is_ok(),
        None => false,
    }
}

pub fn decode_reading<F: Scalar>(line: &str) -> Result<SensorReading<F>, TelemetryError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 5 {
        return Err(TelemetryError::Fields(fields.len()));
    }
    if fields[0] != "v1" {
        return Err(TelemetryError::Version(fields[0].to_owned()));
    }
    if !valid_unit(fields[1]) {
        return Err(TelemetryError::Unit(fields[1].to_owned()));
    }
    let timestamp_ms: u64 = fields[2]
        .parse()
        .map_err(|_| TelemetryError::Number(fields[2].to_owned()))?;
    let vehicle_count: u64 = fields[3]
        .parse()
        .map_err(|_| TelemetryError::Number(fields[3].to_owned()))?;
    let mean_speed_mps: F = fields[4]
        .parse()
        .map_err(|_| TelemetryError::Number(fields[4].to_owned()))?;
    if !mean_speed_mps.is_finite() || mean_speed_mps < F::zero() {
        return Err(TelemetryError::Speed(fields[4].to_owned()));
    }
    Ok(SensorReading {
        unit_id: fields[1].to_owned(),
        timestamp_ms,
        vehicle_count,
        mean_speed_mps,
    })
}

/// One closed window for one unit, attributed to the intersection agent at
/// the unit's downstream end.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentReport<F> {
    pub agent_id: String,
    pub unit_id: String,
    pub window_start_ms: u64,
    pub window_end_ms: u64,
    pub mean_count: F,
    pub readings: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TelemetryCounters {
    /// Lines decoded successfully (stragglers included).
    pub parsed: u64,
    pub malformed: u64,
    /// Readings whose window had already closed when they arrived.
    pub stragglers: u64,
    /// Reports for units the server has no geometry for.
    pub unknown_unit: u64,
}

/// Incremental windowing of a reading stream into per-unit means.
#[derive(Debug, Clone)]
pub struct AgentAggregator<F> {
    window_ms: u64,
    watermark: u64,
    /// Windows below this index are closed; arrivals for them are stragglers.
    next_unclosed: u64,
    open: BTreeMap<(u64, String), (F, u64)>,
    counters: TelemetryCounters,
}

impl<F: Scalar> AgentAggregator<F> {
    pub fn new(window_ms: u64) -> Self {
        assert!(window_ms > 0, "window length must be positive");
        AgentAggregator {
            window_ms,
            watermark: 0,
            next_unclosed: 0,
            open: BTreeMap::new(),
            counters: TelemetryCounters::default(),
        }
    }

    pub fn counters(&self) -> TelemetryCounters {
        self.counters
    }

    pub fn watermark(&self) -> u64 {
        self.watermark
    }

    fn report_for(&self, key: (u64, String), sum: F, n: u64) -> AgentReport<F> {
        let (window, unit_id) = key;
        let agent_id = unit_id
            .split_once('>')
            .expect("open keys hold validated unit ids")
            .1
            .to_owned();
        AgentReport {
            agent_id,
            window_start_ms: window.saturating_mul(self.window_ms),
            window_end_ms: window.saturating_add(1).saturating_mul(self.window_ms),
            mean_count: sum / F::of(n as f64),
            readings: n,
            unit_id,
        }
    }

    /// Closes every window the watermark has left behind, oldest first,
    /// units in id order.
    fn advance(&mut self, out: &mut Vec<AgentReport<F>>) {
        let target = (self.watermark / self.window_ms).saturating_sub(1);
        if target <= self.next_unclosed {
            return;
        }
        while let Some(((w, _), _)) = self.open.first_key_value() {
            if *w >= target {
                break;
            }
            let (key, (sum, n)) = self.open.pop_first().expect("checked non-empty");
            out.push(self.report_for(key, sum, n));
        }
        self.next_unclosed = target;
    }

    /// Feeds one log line; returns any reports this line's watermark
    /// advance closed.
    pub fn push_line(&mut self, line: &str) -> Vec<AgentReport<F>> {
        let reading = match decode_reading::<F>(line) {
            Ok(r) => r,
            Err(_) => {
                self.counters.malformed += 1;
                return Vec::new();
            }
        };
        self.counters.parsed += 1;
        let window = reading.timestamp_ms / self.window_ms;
        if window < self.next_unclosed {
            self.counters.stragglers += 1;
            self.watermark = self.watermark.max(reading.timestamp_ms);
            return Vec::new();
        }
        let slot = self
            .open
            .entry((window, reading.unit_id))
            .or_insert((F::zero(), 0));
        slot.0 += F::of(reading.vehicle_count as f64);
        slot.1 += 1;
        self.watermark = self.watermark.max(reading.timestamp_ms);
        let mut out = Vec::new();
        self.advance(&mut out);
        out
    }

    /// Flushes every still-open window at end of stream.
    pub fn finish(mut self) -> (Vec<AgentReport<F>>, TelemetryCounters) {
        let mut out = Vec::new();
        while let Some((key, (sum, n))) = self.open.pop_first() {
            out.push(self.report_for(key, sum, n));
        }
        (out, self.counters)
    }
}

/// One-shot aggregation of a whole log.
pub fn agent_aggregate<'a, F: Scalar>(
    window_ms: u64,
    lines: impl IntoIterator<Item = &'a str>,
) -> (Vec<AgentReport<F>>, TelemetryCounters) {
    let mut agg = AgentAggregator::new(window_ms);
    let mut reports = Vec::new();
    for line in lines {
        reports.extend(agg.push_line(line));
    }
    let (rest, counters) = agg.finish();
    reports.extend(rest);
    (reports, counters)
}

/// Geometry the server needs to turn a count into a congestion index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerUnit<F> {
    pub length_m: F,
    pub lanes: u32,
}

/// Congestion state of one unit as the server sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCongestion<F> {
    pub chi: F,
    /// No closed window has ever arrived for this unit.
    pub stale: bool,
    pub window_end_ms: u64,
}

/// The server's answer: congestion per configured unit at a given instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CongestionMap<F> {
    pub as_of_ms: u64,
    pub units: BTreeMap<String, UnitCongestion<F>>,
}

/// Keeps the latest closed window per unit and derives congestion from its
/// rounded mean count.
#[derive(Debug, Clone)]
pub struct CongestionServer<F> {
    jam_density: F,
    units: BTreeMap<String, ServerUnit<F>>,
    latest: BTreeMap<String, (u64, F)>,
    unknown_unit: u64,
}

impl<F: Scalar> CongestionServer<F> {
    pub fn new(jam_density: F, units: BTreeMap<String, ServerUnit<F>>) -> Self {
        CongestionServer {
            jam_density,
            units,
            latest: BTreeMap::new(),
            unknown_unit: 0,
        }
    }

    pub fn unknown_unit(&self) -> u64 {
        self.unknown_unit
    }

    pub fn ingest(&mut self, report: &AgentReport<F>) {
        if !self.units.contains_key(&report.unit_id) {
            self.unknown_unit += 1;
            return;
        }
        let slot = self.latest.entry(report.unit_id.clone());
        match slot {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert((report.window_end_ms, report.mean_count));
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                if report.window_end_ms >= o.get().0 {
                    o.insert((report.window_end_ms, report.mean_count));
                }
            }
        }
    }

    pub fn map(&self, as_of_ms: u64) -> CongestionMap<F> {
        let units = self
            .units
            .iter()
            .map(|(id, geom)| {
                let state = match self.latest.get(id) {
                    Some(&(window_end_ms, mean)) => {
                        let count = mean.round().as_f64() as u64;
                        UnitCongestion {
                            chi: congestion_index(count, geom.length_m, geom.lanes, self.jam_density),
                            stale: false,
                            window_end_ms,
                        }
                    }
                    None => UnitCongestion {
                        chi: F::zero(),
                        stale: true,
                        window_end_ms: 0,
                    },
                };
                (id.clone(), state)
            })
            .collect();
        CongestionMap { as_of_ms, units }
    }
}

/// Result of replaying a log through both pipeline implementations.
#[derive(Debug, Clone)]
pub struct PipelineCheck<F> {
    pub matches: bool,
    pub mismatches: Vec<String>,
    pub counters: TelemetryCounters,
    pub map: CongestionMap<F>,
}

/// Runs a log line by line through the incremental aggregator-plus-server
/// path, then recomputes the same answer in one direct batch pass, and
/// compares the two exactly: equal congestion maps (bit-equal scalars) and
/// equal counters, or a list of descriptions of where they diverge.
pub fn verify_pipeline<F: Scalar>(
    lines: &[String],
    window_ms: u64,
    jam_density: F,
    units: &BTreeMap<String, ServerUnit<F>>,
    as_of_ms: u64,
) -> PipelineCheck<F> {
    // Incremental path: reports are ingested the moment a window closes.
    let mut agg = AgentAggregator::<F>::new(window_ms);
    let mut server = CongestionServer::new(jam_density, units.clone());
    for line in lines {
        for report in agg.push_line(line) {
            server.ingest(&report);
        }
    }
    let (rest, mut counters) = agg.finish();
    for report in &rest {
        server.ingest(report);
    }
    counters.unknown_unit = server.unknown_unit();
    let stepped = server.map(as_of_ms);

    // Direct path: one batch pass over the same lines.
    let mut direct_counters = TelemetryCounters::default();
    let mut max_ts: u64 = 0;
    let mut groups: BTreeMap<(u64, String), (F, u64)> = BTreeMap::new();
    for line in lines {
        let r = match decode_reading::<F>(line) {
            Ok(r) => r,
            Err(_) => {
                direct_counters.malformed += 1;
                continue;
            }
        };
        direct_counters.parsed += 1;
        let window = r.timestamp_ms / window_ms;
        if window < (max_ts / window_ms).saturating_sub(1) {
            direct_counters.stragglers += 1;
            max_ts = max_ts.max(r.timestamp_ms);
            continue;
        }
        max_ts = max_ts.max(r.timestamp_ms);
        let slot = groups.entry((window, r.unit_id)).or_insert((F::zero(), 0));
        slot.0 += F::of(r.vehicle_count as f64);
        slot.1 += 1;
    }
    let mut latest: BTreeMap<String, (u64, F)> = BTreeMap::new();
    for ((window, unit), (sum, n)) in groups {
        if !units.contains_key(&unit) {
            direct_counters.unknown_unit += 1;
            continue;
        }
        let end = window.saturating_add(1).saturating_mul(window_ms);
        let mean = sum / F::of(n as f64);
        match latest.entry(unit) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert((end, mean));
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                if end >= o.get().0 {
                    o.insert((end, mean));
                }
            }
        }
    }
    let direct_units: BTreeMap<String, UnitCongestion<F>> = units
        .iter()
        .map(|(id, geom)| {
            let state = match latest.get(id) {
                Some(&(window_end_ms, mean)) => UnitCongestion {
                    chi: congestion_index(
                        mean.round().as_f64() as u64,
                        geom.length_m,
                        geom.lanes,
                        jam_density,
                    ),
                    stale: false,
                    window_end_ms,
                },
                None => UnitCongestion {
                    chi: F::zero(),
                    stale: true,
                    window_end_ms: 0,
                },
            };
            (id.clone(), state)
        })
        .collect();

    let mut mismatches = Vec::new();
    for (id, a) in &stepped.units {
        match direct_units.get(id) {
            Some(b) if a == b => {}
            Some(b) => mismatches.push(format!("unit {id}: stepped {a:?} vs direct {b:?}")),
            None => mismatches.push(format!("unit {id}: missing from direct pass")),
        }
    }
    if counters != direct_counters {
        mismatches.push(format!(
            "counters: stepped {counters:?} vs direct {direct_counters:?}"
        ));
    }
    PipelineCheck {
        matches: mismatches.is_empty(),
        mismatches,
        counters,
        map: stepped,
    }
}
