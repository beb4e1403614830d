//! Tool configuration: one JSON document holding the scenario data, the
//! simulated network, and replication settings.
//!
//! Every section is optional; omitted values fall back to the Calais case
//! study for the scenario data and to the fixture network for simulation.
//! Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scenario::{calibrate_routing, BaselineCounts, CostModel, Scenario, ScenarioFactorGrid};
use crate::sim::{ArrivalProfile, NetworkConfig, HOURS_PER_YEAR};
use crate::{Error, Result};

/// Root seed used when none is configured.
pub const DEFAULT_ROOT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub horizon_hours: f64,
    pub network: NetworkConfig,
    /// Rate profile used by the variable-arrival modes.
    pub peak_profile: ArrivalProfile,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            horizon_hours: HOURS_PER_YEAR,
            network: NetworkConfig::fixture(),
            peak_profile: fixture_peak_profile(),
        }
    }
}

/// Daily pattern of the fixture: an 8-hour busy window from 07:00 at 1.6×
/// the mean rate, 0.7× otherwise.
pub fn fixture_peak_profile() -> ArrivalProfile {
    ArrivalProfile::daily_peak(7.0, 8.0, 1.6).expect("fixture profile is valid")
}

/// How simulated misses turn into costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostReduction {
    /// Price the mean missed count of each scenario cell.
    #[default]
    MeanMissed,
    /// Price each replication, then average the costs.
    PerReplication,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicationPolicy {
    pub reps: usize,
    /// Target 95% half-width relative to the mean when sizing from a pilot.
    pub relative_precision: f64,
}

impl Default for ReplicationPolicy {
    fn default() -> Self {
        ReplicationPolicy {
            reps: 10,
            relative_precision: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub baseline: BaselineCounts,
    pub cost_model: CostModel,
    pub grid: ScenarioFactorGrid,
    pub simulation: SimulationConfig,
    pub replications: ReplicationPolicy,
    pub root_seed: u64,
    pub cost_reduction: CostReduction,
    pub output_dir: Option<String>,
}

impl Default for ToolConfig {
    fn default() -> Self {
        ToolConfig {
            baseline: BaselineCounts::calais(),
            cost_model: CostModel::calais(),
            grid: ScenarioFactorGrid::calais(),
            simulation: SimulationConfig::default(),
            replications: ReplicationPolicy::default(),
            root_seed: DEFAULT_ROOT_SEED,
            cost_reduction: CostReduction::default(),
            output_dir: None,
        }
    }
}

impl ToolConfig {
    /// Checks every section and that each grid scenario calibrates, both
    /// as routing probabilities and on the simulated network.
    pub fn validate(&self) -> Result<()> {
        self.baseline.validate()?;
        self.cost_model.validate()?;
        self.grid.validate()?;
        self.simulation.network.validate()?;
        self.simulation.peak_profile.validate()?;
        if !(self.simulation.horizon_hours >= 0.0) {
            return Err(Error::Config {
                path: "simulation.horizon_hours".into(),
                message: "must be non-negative".into(),
            });
        }
        if self.replications.reps == 0 {
            return Err(Error::Config {
                path: "replications.reps".into(),
                message: "must be at least 1".into(),
            });
        }
        if !(self.replications.relative_precision > 0.0) {
            return Err(Error::Config {
                path: "replications.relative_precision".into(),
                message: "must be positive".into(),
            });
        }
        for cell in self.grid.cells() {
            for option in &self.grid.search_growth {
                let scenario = Scenario::new(cell.tg, cell.cg, option.growth);
                let context = || {
                    format!(
                        "scenario tg={}, cg={}, sg={}",
                        cell.tg, cell.cg, option.growth
                    )
                };
                let routing = calibrate_routing(&scenario, &self.baseline, &self.grid)
                    .map_err(|e| e.context(context()))?;
                self.simulation
                    .network
                    .calibrate(&routing, true, false)
                    .map_err(|e| e.context(context()))?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(compact.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Parses and validates a configuration document. A blank document yields
/// the defaults.
pub fn parse_config(document: &str) -> Result<ToolConfig> {
    let document = if document.trim().is_empty() {
        "{}"
    } else {
        document
    };
    let mut de = serde_json::Deserializer::from_str(document);
    let config: ToolConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config {
            path: if path.is_empty() { ".".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    de.end().map_err(|e| Error::Config {
        path: ".".into(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}
