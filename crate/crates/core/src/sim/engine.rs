//! Replication runner over one event calendar.
//!
//! Monte Carlo mode pushes lorries through the stations one after another
//! with no notion of time. DES modes draw arrival times and hold lorries in
//! FIFO queues for timed checks. A run stops at the horizon, or once a fixed
//! number of lorries has arrived and drained.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::arrivals::{ArrivalProcess, ArrivalProfile};
use super::rng::{uniform, Streams};
use super::station::{Admission, NetworkConfig, QueueState, StationConfig, UK_SHED};
use crate::scenario::{CalibratedRouting, Scenario};
use crate::{Error, Result};

pub const HOURS_PER_YEAR: f64 = 8_760.0;
const STATIONS: usize = 3;
const TRACE_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    /// Zero delays, unbounded queues.
    #[serde(rename = "mc")]
    Mc,
    /// Timed checks.
    #[serde(rename = "des0")]
    Des0,
    /// Timed checks, variable arrival rate.
    #[serde(rename = "des1")]
    Des1,
    /// Timed checks, restricted shed queue.
    #[serde(rename = "des2")]
    Des2,
    /// Variable arrival rate and restricted shed queue.
    #[serde(rename = "des3")]
    Des3,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Mc, Mode::Des0, Mode::Des1, Mode::Des2, Mode::Des3];

    pub fn variable_arrivals(self) -> bool {
        matches!(self, Mode::Des1 | Mode::Des3)
    }

    pub fn restricted_queues(self) -> bool {
        matches!(self, Mode::Des2 | Mode::Des3)
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Mc => "MC",
            Mode::Des0 => "DES0",
            Mode::Des1 => "DES1",
            Mode::Des2 => "DES2",
            Mode::Des3 => "DES3",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown simulation mode `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Simulated hours; ignored in MC mode and when `lorry_limit` is set.
    pub horizon: f64,
    pub scenario: Scenario,
    pub network: NetworkConfig,
    /// Rate profile applied in the variable-arrival modes.
    pub peak_profile: ArrivalProfile,
    pub seed: u64,
    /// Fixed number of lorries instead of a time horizon. MC mode defaults
    /// to the calibrated annual volume.
    pub lorry_limit: Option<u64>,
}

impl RunConfig {
    pub fn new(
        mode: Mode,
        scenario: Scenario,
        network: NetworkConfig,
        peak_profile: ArrivalProfile,
        seed: u64,
    ) -> Self {
        RunConfig {
            mode,
            horizon: HOURS_PER_YEAR,
            scenario,
            network,
            peak_profile,
            seed,
            lorry_limit: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.network.validate()?;
        if !(self.horizon >= 0.0) {
            return Err(Error::Config {
                path: "simulation.horizon_hours".into(),
                message: format!("horizon {} must be non-negative", self.horizon),
            });
        }
        if self.mode.restricted_queues()
            && self.network.stations[UK_SHED].restricted_capacity.is_none()
        {
            return Err(Error::Config {
                path: "simulation.network.uk_shed.restricted_capacity".into(),
                message: format!("{} needs a finite shed queue", self.mode.label()),
            });
        }
        if self.mode.variable_arrivals() {
            self.peak_profile.validate()?;
        }
        Ok(())
    }

    /// Stations as simulated in this mode.
    pub fn stations(&self, routing: &CalibratedRouting) -> Result<Vec<StationConfig>> {
        self.network.calibrate(
            routing,
            self.mode.restricted_queues(),
            self.mode == Mode::Mc,
        )
    }

    pub fn arrival_process(&self, routing: &CalibratedRouting) -> ArrivalProcess {
        ArrivalProcess {
            base_rate: routing.n_lorries / HOURS_PER_YEAR,
            profile: if self.mode.variable_arrivals() {
                self.peak_profile.clone()
            } else {
                ArrivalProfile::Homogeneous
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exit {
    FranceFound,
    ShedFound,
    BerthFound,
    Missed,
    NegativeThrough,
}

impl Exit {
    fn found_at(station: usize) -> Exit {
        match station {
            0 => Exit::FranceFound,
            1 => Exit::ShedFound,
            _ => Exit::BerthFound,
        }
    }
}

/// A lorry and the draws that decide its route.
#[derive(Debug, Clone, PartialEq)]
pub struct Lorry {
    pub id: u64,
    pub positive: bool,
    pub arrival_time: f64,
    pub selection_draws: [f64; STATIONS],
    /// Uniform deciding the next check of a positive lorry. Starts as the
    /// prevalence draw rescaled onto `[0, 1)` and, after each check that
    /// clears the lorry, is rescaled onto the uncaught remainder.
    pub detection_draw: f64,
    /// Time each station was reached, NaN if not yet.
    pub station_times: [f64; STATIONS],
    /// Bit `k` set if the lorry skipped station `k` because its queue was full.
    pub bypassed: u8,
    pub exit: Option<Exit>,
}

impl Lorry {
    fn draw(id: u64, p_positive: f64, arrival_time: f64, streams: &mut Streams) -> Self {
        let u = uniform(&mut streams.prevalence);
        let positive = u < p_positive;
        let mut selection_draws = [0.0; STATIONS];
        for d in &mut selection_draws {
            *d = uniform(&mut streams.selection);
        }
        Lorry {
            id,
            positive,
            arrival_time,
            selection_draws,
            detection_draw: if positive { u / p_positive } else { 0.0 },
            station_times: [f64::NAN; STATIONS],
            bypassed: 0,
            exit: None,
        }
    }

    /// Resolves a completed check, consuming the detection draw.
    pub fn check(&mut self, station: &StationConfig) -> bool {
        if !self.positive {
            return false;
        }
        let clear = 1.0 - station.detection_probability;
        if self.detection_draw >= clear {
            return true;
        }
        self.detection_draw /= clear;
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationStats {
    pub name: String,
    pub checks: u64,
    pub bypassed: u64,
    pub utilization: f64,
    pub max_queue: u64,
}

/// Outcome of one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunStats {
    pub arrivals: u64,
    pub france_found: u64,
    pub shed_found: u64,
    pub berth_found: u64,
    pub missed: u64,
    pub negative_through: u64,
    /// Lorries still queued or in service when the run stopped.
    pub in_system: u64,
    pub stations: Vec<StationStats>,
    /// Mean hours from arrival to exit over lorries that exited.
    pub mean_time_in_system: f64,
    pub end_time: f64,
}

impl RunStats {
    pub fn uk_found(&self) -> u64 {
        self.shed_found + self.berth_found
    }

    pub fn exits(&self) -> u64 {
        self.france_found + self.shed_found + self.berth_found + self.missed + self.negative_through
    }

    pub fn exit_counts(&self) -> [u64; 5] {
        [
            self.france_found,
            self.shed_found,
            self.berth_found,
            self.missed,
            self.negative_through,
        ]
    }

    fn empty(stations: &[StationConfig]) -> Self {
        RunStats {
            arrivals: 0,
            france_found: 0,
            shed_found: 0,
            berth_found: 0,
            missed: 0,
            negative_through: 0,
            in_system: 0,
            stations: stations
                .iter()
                .map(|s| StationStats {
                    name: s.name.clone(),
                    checks: 0,
                    bypassed: 0,
                    utilization: 0.0,
                    max_queue: 0,
                })
                .collect(),
            mean_time_in_system: 0.0,
            end_time: 0.0,
        }
    }

    fn record_exit(&mut self, exit: Exit) {
        match exit {
            Exit::FranceFound => self.france_found += 1,
            Exit::ShedFound => self.shed_found += 1,
            Exit::BerthFound => self.berth_found += 1,
            Exit::Missed => self.missed += 1,
            Exit::NegativeThrough => self.negative_through += 1,
        }
    }
}

/// Runs one replication of `config` with probabilities from `routing`.
pub fn run_replication(config: &RunConfig, routing: &CalibratedRouting) -> Result<RunStats> {
    config.validate()?;
    let stations = config.stations(routing)?;
    let mut streams = Streams::new(config.seed);
    match config.mode {
        Mode::Mc => {
            let n = config
                .lorry_limit
                .unwrap_or_else(|| routing.n_lorries.round() as u64);
            Ok(run_instant(&stations, routing.p_positive, n, &mut streams))
        }
        _ => {
            let arrivals = config.arrival_process(routing);
            arrivals.validate()?;
            let stop = match config.lorry_limit {
                Some(n) => Stop::Count(n),
                None => Stop::Horizon(config.horizon),
            };
            Des::new(&stations, routing.p_positive, arrivals, stop, streams).run()
        }
    }
}

/// Monte Carlo pass: every lorry arrives at time zero and every check is
/// instantaneous, so each lorry's route depends only on its own draws.
fn run_instant(
    stations: &[StationConfig],
    p_positive: f64,
    n: u64,
    streams: &mut Streams,
) -> RunStats {
    let mut stats = RunStats::empty(stations);
    stats.arrivals = n;
    for id in 0..n {
        let mut lorry = Lorry::draw(id, p_positive, 0.0, streams);
        let mut exit = None;
        for (k, station) in stations.iter().enumerate() {
            if station.admit(lorry.selection_draws[k], QueueState::default()) == Admission::Checked
            {
                stats.stations[k].checks += 1;
                if lorry.check(station) {
                    exit = Some(Exit::found_at(k));
                    break;
                }
            }
        }
        stats.record_exit(exit.unwrap_or(if lorry.positive {
            Exit::Missed
        } else {
            Exit::NegativeThrough
        }));
    }
    stats
}

#[derive(Debug, Clone, Copy)]
enum Stop {
    Horizon(f64),
    Count(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Completion {
    time: f64,
    seq: u64,
    station: usize,
    slot: usize,
}

impl Eq for Completion {}

impl Ord for Completion {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Completion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy)]
enum TraceKind {
    Arrival,
    Complete,
    Bypass,
    Exit(Exit),
}

impl TraceKind {
    fn describe(self) -> String {
        match self {
            TraceKind::Arrival => "arrival".into(),
            TraceKind::Complete => "complete".into(),
            TraceKind::Bypass => "bypass".into(),
            TraceKind::Exit(exit) => format!("exit {exit:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct TraceEntry {
    time: f64,
    kind: TraceKind,
    lorry: u64,
    station: usize,
}

#[derive(Debug, Default)]
struct StationState {
    busy: u32,
    queue: VecDeque<usize>,
    busy_time: f64,
}

struct Des<'a> {
    stations: &'a [StationConfig],
    state: Vec<StationState>,
    p_positive: f64,
    arrivals: ArrivalProcess,
    stop: Stop,
    streams: Streams,
    lorries: Vec<Lorry>,
    free_slots: Vec<usize>,
    calendar: BinaryHeap<Reverse<Completion>>,
    seq: u64,
    stats: RunStats,
    time_in_system: f64,
    trace: VecDeque<TraceEntry>,
}

impl<'a> Des<'a> {
    fn new(
        stations: &'a [StationConfig],
        p_positive: f64,
        arrivals: ArrivalProcess,
        stop: Stop,
        streams: Streams,
    ) -> Self {
        Des {
            stations,
            state: stations.iter().map(|_| StationState::default()).collect(),
            p_positive,
            arrivals,
            stop,
            streams,
            lorries: Vec::new(),
            free_slots: Vec::new(),
            calendar: BinaryHeap::new(),
            seq: 0,
            stats: RunStats::empty(stations),
            time_in_system: 0.0,
            trace: VecDeque::with_capacity(TRACE_LEN),
        }
    }

    fn run(mut self) -> Result<RunStats> {
        let mut next_arrival = self.draw_next_arrival(0.0);
        let mut now = 0.0;
        loop {
            let next_completion = self.calendar.peek().map(|Reverse(c)| c.time);
            // Completions go first on ties.
            let take_completion = match (next_completion, next_arrival) {
                (Some(c), Some(a)) => c <= a,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            let t = if take_completion {
                next_completion.expect("checked")
            } else {
                next_arrival.expect("checked")
            };
            if let Stop::Horizon(h) = self.stop {
                if t > h {
                    break;
                }
            }
            now = t;
            if take_completion {
                let Reverse(c) = self.calendar.pop().expect("peeked");
                self.complete(c)?;
            } else {
                self.arrive(now)?;
                next_arrival = self.draw_next_arrival(now);
            }
        }
        let end = match self.stop {
            Stop::Horizon(h) => h,
            Stop::Count(_) => now,
        };
        self.finish(end)
    }

    fn draw_next_arrival(&mut self, now: f64) -> Option<f64> {
        match self.stop {
            Stop::Count(n) if self.stats.arrivals >= n => None,
            Stop::Horizon(h) if now > h => None,
            _ => {
                let t = self.arrivals.next_arrival(now, &mut self.streams.arrivals);
                t.is_finite().then_some(t)
            }
        }
    }

    fn push_trace(&mut self, time: f64, kind: TraceKind, lorry: u64, station: usize) {
        if self.trace.len() == TRACE_LEN {
            self.trace.pop_front();
        }
        self.trace.push_back(TraceEntry {
            time,
            kind,
            lorry,
            station,
        });
    }

    fn fault(&self, message: String) -> Error {
        Error::SimulationFault {
            message,
            trace: self
                .trace
                .iter()
                .map(|e| {
                    format!(
                        "t={:.4} {} lorry {} station {}",
                        e.time,
                        e.kind.describe(),
                        e.lorry,
                        e.station
                    )
                })
                .collect(),
        }
    }

    fn arrive(&mut self, now: f64) -> Result<()> {
        let id = self.stats.arrivals;
        self.stats.arrivals += 1;
        let lorry = Lorry::draw(id, self.p_positive, now, &mut self.streams);
        let slot = match self.free_slots.pop() {
            Some(slot) => {
                self.lorries[slot] = lorry;
                slot
            }
            None => {
                self.lorries.push(lorry);
                self.lorries.len() - 1
            }
        };
        self.push_trace(now, TraceKind::Arrival, id, 0);
        self.advance(slot, 0, now)
    }

    /// Moves a lorry forward from station `from` until it queues, starts a
    /// timed check, or leaves the system.
    fn advance(&mut self, slot: usize, from: usize, now: f64) -> Result<()> {
        for k in from..self.stations.len() {
            let station = &self.stations[k];
            self.lorries[slot].station_times[k] = now;
            let queue = QueueState {
                waiting: self.state[k].queue.len() as u64,
                busy: self.state[k].busy,
            };
            match station.admit(self.lorries[slot].selection_draws[k], queue) {
                Admission::NotSelected => {}
                Admission::Bypassed => {
                    self.stats.stations[k].bypassed += 1;
                    self.lorries[slot].bypassed |= 1 << k;
                    let id = self.lorries[slot].id;
                    self.push_trace(now, TraceKind::Bypass, id, k);
                }
                Admission::Checked => {
                    self.stats.stations[k].checks += 1;
                    if station.is_instant() {
                        if self.lorries[slot].check(station) {
                            self.exit(slot, Exit::found_at(k), now);
                            return Ok(());
                        }
                    } else if self.state[k].busy < station.servers {
                        self.start_service(k, slot, now);
                        return Ok(());
                    } else {
                        let state = &mut self.state[k];
                        state.queue.push_back(slot);
                        let len = state.queue.len() as u64;
                        if len > station.queue_capacity {
                            return Err(self.fault(format!(
                                "queue at {} reached {len}, capacity {}",
                                station.name, station.queue_capacity
                            )));
                        }
                        let stats = &mut self.stats.stations[k];
                        stats.max_queue = stats.max_queue.max(len);
                        return Ok(());
                    }
                }
            }
        }
        let exit = if self.lorries[slot].positive {
            Exit::Missed
        } else {
            Exit::NegativeThrough
        };
        self.exit(slot, exit, now);
        Ok(())
    }

    fn start_service(&mut self, station: usize, slot: usize, now: f64) {
        let duration = self.stations[station]
            .service_time
            .sample(uniform(&mut self.streams.service));
        let counted = match self.stop {
            Stop::Horizon(h) => duration.min(h - now).max(0.0),
            Stop::Count(_) => duration,
        };
        let state = &mut self.state[station];
        state.busy += 1;
        state.busy_time += counted;
        self.seq += 1;
        self.calendar.push(Reverse(Completion {
            time: now + duration,
            seq: self.seq,
            station,
            slot,
        }));
    }

    fn complete(&mut self, c: Completion) -> Result<()> {
        let Completion {
            time: now,
            station: k,
            slot,
            ..
        } = c;
        let id = self.lorries[slot].id;
        self.push_trace(now, TraceKind::Complete, id, k);
        if self.state[k].busy == 0 {
            return Err(self.fault(format!(
                "completion at idle station {}",
                self.stations[k].name
            )));
        }
        self.state[k].busy -= 1;
        if self.lorries[slot].check(&self.stations[k]) {
            self.exit(slot, Exit::found_at(k), now);
        } else {
            self.advance(slot, k + 1, now)?;
        }
        if let Some(next) = self.state[k].queue.pop_front() {
            self.start_service(k, next, now);
        }
        Ok(())
    }

    fn exit(&mut self, slot: usize, exit: Exit, now: f64) {
        let lorry = &mut self.lorries[slot];
        lorry.exit = Some(exit);
        self.time_in_system += now - lorry.arrival_time;
        let id = lorry.id;
        self.stats.record_exit(exit);
        self.push_trace(now, TraceKind::Exit(exit), id, 0);
        self.free_slots.push(slot);
    }

    fn finish(mut self, end: f64) -> Result<RunStats> {
        let in_system = self.lorries.len() - self.free_slots.len();
        self.stats.in_system = in_system as u64;
        self.stats.end_time = end;
        let exits = self.stats.exits();
        if exits + self.stats.in_system != self.stats.arrivals {
            return Err(self.fault(format!(
                "{} arrivals but {exits} exits and {} in system",
                self.stats.arrivals, self.stats.in_system
            )));
        }
        if exits > 0 {
            self.stats.mean_time_in_system = self.time_in_system / exits as f64;
        }
        for (k, station) in self.stations.iter().enumerate() {
            let capacity = f64::from(station.servers) * end;
            self.stats.stations[k].utilization = if station.is_instant() || capacity <= 0.0 {
                0.0
            } else {
                (self.state[k].busy_time / capacity).clamp(0.0, 1.0)
            };
        }
        Ok(self.stats)
    }
}
