//! Screening stations and the three-station network.

use serde::{Deserialize, Serialize};

use super::variates::ServiceTime;
use crate::scenario::CalibratedRouting;
use crate::{Error, Result};

/// Capacity standing in for an unbounded queue.
pub const UNBOUNDED_QUEUE: u64 = 1_000_000;

/// A calibrated screening station as the simulator sees it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationConfig {
    pub name: String,
    /// Share of arriving traffic routed into this check.
    pub selection_probability: f64,
    /// Chance a checked positive lorry is caught.
    pub detection_probability: f64,
    /// Lorries allowed to wait (excluding those in service).
    pub queue_capacity: u64,
    pub servers: u32,
    pub service_time: ServiceTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    NotSelected,
    /// Selected, but the queue was full.
    Bypassed,
    Checked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueueState {
    pub waiting: u64,
    pub busy: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationDraws {
    pub selection: f64,
    pub detection: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationOutcome {
    NotSelected,
    Bypassed,
    Found,
    Cleared,
}

impl StationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: String| Error::Config {
            path: format!("network.{}", self.name),
            message,
        };
        for (what, p) in [
            ("selection", self.selection_probability),
            ("detection", self.detection_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(format!("{what} probability {p} outside [0, 1]")));
            }
        }
        self.service_time.validate()?;
        if !self.service_time.is_zero() && self.servers == 0 {
            return Err(bad("a timed check needs at least one server".into()));
        }
        Ok(())
    }

    /// Checks with no service time take no resource and never queue.
    #[inline]
    pub fn is_instant(&self) -> bool {
        self.service_time.is_zero()
    }

    #[inline]
    pub fn admit(&self, selection_draw: f64, queue: QueueState) -> Admission {
        if selection_draw >= self.selection_probability {
            Admission::NotSelected
        } else if self.is_instant()
            || queue.busy < self.servers
            || queue.waiting < self.queue_capacity
        {
            Admission::Checked
        } else {
            Admission::Bypassed
        }
    }

    #[inline]
    pub fn detects(&self, positive: bool, detection_draw: f64) -> bool {
        positive && detection_draw < self.detection_probability
    }
}

/// Admission and, for checked lorries, the check result in one step.
pub fn route_through_station(
    positive: bool,
    station: &StationConfig,
    queue: QueueState,
    draws: StationDraws,
) -> StationOutcome {
    match station.admit(draws.selection, queue) {
        Admission::NotSelected => StationOutcome::NotSelected,
        Admission::Bypassed => StationOutcome::Bypassed,
        Admission::Checked if station.detects(positive, draws.detection) => StationOutcome::Found,
        Admission::Checked => StationOutcome::Cleared,
    }
}

/// Operational description of a station before calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub name: String,
    /// Share of traffic selected in the no-growth scenario.
    pub base_selection: f64,
    /// Whether selection scales with the searched fraction `(1+sg)/(1+tg)`.
    #[serde(default)]
    pub scales_with_search: bool,
    #[serde(default = "one")]
    pub servers: u32,
    #[serde(default = "zero_service")]
    pub service_time: ServiceTime,
    /// Waiting-room size when queues are restricted; `None` never restricts.
    #[serde(default)]
    pub restricted_capacity: Option<u64>,
}

fn one() -> u32 {
    1
}

fn zero_service() -> ServiceTime {
    ServiceTime::Zero
}

/// The France, UK shed and UK berth stations, in lorry order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub stations: Vec<StationSpec>,
}

pub const FRANCE: usize = 0;
pub const UK_SHED: usize = 1;
pub const UK_BERTH: usize = 2;

impl NetworkConfig {
    /// Illustrative operating parameters, not measured data.
    ///
    /// France and the berth check every lorry instantly. The shed selects
    /// 60% of traffic at baseline, scaled with search intensity. It has 16
    /// bays with triangular(0.10, 0.15, 0.35) hour searches, and its waiting
    /// area holds 25 lorries when queues are restricted.
    pub fn fixture() -> Self {
        NetworkConfig {
            stations: vec![
                StationSpec {
                    name: "france".into(),
                    base_selection: 1.0,
                    scales_with_search: false,
                    servers: 1,
                    service_time: ServiceTime::Zero,
                    restricted_capacity: None,
                },
                StationSpec {
                    name: "uk_shed".into(),
                    base_selection: 0.6,
                    scales_with_search: true,
                    servers: 16,
                    service_time: ServiceTime::Triangular {
                        min: 0.10,
                        mode: 0.15,
                        max: 0.35,
                    },
                    restricted_capacity: Some(25),
                },
                StationSpec {
                    name: "uk_berth".into(),
                    base_selection: 1.0,
                    scales_with_search: false,
                    servers: 1,
                    service_time: ServiceTime::Zero,
                    restricted_capacity: None,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stations.len() != 3 {
            return Err(Error::Config {
                path: "simulation.network.stations".into(),
                message: format!(
                    "expected 3 stations (france, uk_shed, uk_berth), found {}",
                    self.stations.len()
                ),
            });
        }
        for spec in &self.stations {
            if !(spec.base_selection > 0.0 && spec.base_selection <= 1.0) {
                return Err(Error::Config {
                    path: format!("simulation.network.{}.base_selection", spec.name),
                    message: format!("{} outside (0, 1]", spec.base_selection),
                });
            }
            spec.service_time.validate()?;
        }
        Ok(())
    }

    /// Per-scenario station configs whose selection × detection reproduce
    /// the calibrated catch fractions.
    pub fn calibrate(
        &self,
        routing: &CalibratedRouting,
        restrict_queues: bool,
        zero_delays: bool,
    ) -> Result<Vec<StationConfig>> {
        self.validate()?;
        let catch = [
            routing.p_found_france,
            routing.p_found_shed_given_past_france,
            routing.p_found_berth_given_past_shed,
        ];
        self.stations
            .iter()
            .zip(catch)
            .map(|(spec, catch)| {
                let selection = if spec.scales_with_search {
                    spec.base_selection * routing.search_ratio
                } else {
                    spec.base_selection
                };
                if selection > 1.0 {
                    return Err(Error::Calibration(format!(
                        "station `{}` would select {selection:.4} of traffic",
                        spec.name
                    )));
                }
                let detection = catch / selection;
                if detection > 1.0 + 1e-12 {
                    return Err(Error::Calibration(format!(
                        "station `{}` needs detection {detection:.4} > 1 at selection {selection:.4}",
                        spec.name
                    )));
                }
                let queue_capacity = match spec.restricted_capacity {
                    Some(cap) if restrict_queues && !zero_delays => cap,
                    _ => UNBOUNDED_QUEUE,
                };
                let station = StationConfig {
                    name: spec.name.clone(),
                    selection_probability: selection,
                    detection_probability: detection.min(1.0),
                    queue_capacity,
                    servers: spec.servers,
                    service_time: if zero_delays {
                        ServiceTime::Zero
                    } else {
                        spec.service_time
                    },
                };
                station.validate()?;
                Ok(station)
            })
            .collect()
    }
}
