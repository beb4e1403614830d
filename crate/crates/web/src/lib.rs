//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function takes a configuration document (JSON, may be
//! empty for the defaults) and returns a JSON string. The `*_report`
//! functions hold the logic and run natively too; the `#[wasm_bindgen]`
//! wrappers only convert errors into JavaScript exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use screencost::config::{parse_config, ToolConfig};
use screencost::experiment::{run_config, run_grid, Method};
use screencost::scenario::{calibrate_routing, ExitCounts, Scenario};
use screencost::sim::{run_replication, Mode, RunStats};
use screencost::{analytic, dtree, Money};

#[derive(Serialize)]
struct OptionCost {
    sg: f64,
    cost: i64,
    above_cheapest: i64,
}

#[derive(Serialize)]
struct SaLevel {
    cg: f64,
    tg_levels: Vec<f64>,
    sg_levels: Vec<f64>,
    searched: Vec<Vec<f64>>,
    found: Vec<Vec<f64>>,
    missed: Vec<Vec<f64>>,
    cost: Vec<Vec<i64>>,
}

#[derive(Serialize)]
struct SaReport {
    options: Vec<OptionCost>,
    cheapest_sg: f64,
    levels: Vec<SaLevel>,
}

#[derive(Serialize)]
struct TreeCounts {
    tg: f64,
    cg: f64,
    sg: f64,
    counts: ExitCounts,
}

#[derive(Serialize)]
struct TreeReport {
    options: Vec<OptionCost>,
    cheapest_sg: f64,
    nodes: usize,
    counts: Vec<TreeCounts>,
    text: String,
}

#[derive(Serialize)]
struct SimReport {
    mode: &'static str,
    scenario: Scenario,
    seed: u64,
    expected: ExitCounts,
    stats: RunStats,
    /// Missed-lorry cost plus the search option's cost, in whole pounds.
    cost: i64,
}

fn load(config_json: &str) -> Result<ToolConfig, String> {
    parse_config(config_json).map_err(|e| e.to_string())
}

fn options(config: &ToolConfig, method: Method) -> Result<(Vec<OptionCost>, f64), String> {
    let result = run_grid(method, config).map_err(|e| e.to_string())?;
    let rows = result
        .sg_levels
        .iter()
        .zip(&result.option_costs)
        .zip(&result.ranking.relative)
        .map(|((&sg, cost), rel)| OptionCost {
            sg,
            cost: cost.whole_pounds(),
            above_cheapest: rel.whole_pounds(),
        })
        .collect();
    Ok((rows, result.cheapest_growth()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Scenario-analysis grids for every clandestine-growth level plus the
/// expected cost of each search option.
pub fn scenario_analysis_report(config_json: &str) -> Result<String, String> {
    let config = load(config_json)?;
    let (options, cheapest_sg) = options(&config, Method::Sa)?;
    let mut levels = Vec::new();
    for level in &config.grid.clandestine_growth {
        let g = analytic::sa_grid(
            level.value,
            &config.grid,
            &config.baseline,
            &config.cost_model,
        )
        .map_err(|e| e.to_string())?;
        let pick = |f: &dyn Fn(&analytic::SaCell) -> f64| -> Vec<Vec<f64>> {
            g.cells
                .iter()
                .map(|row| row.iter().map(f).collect())
                .collect()
        };
        levels.push(SaLevel {
            cg: g.cg,
            tg_levels: g.tg_levels.clone(),
            sg_levels: g.sg_levels.clone(),
            searched: pick(&|c| c.searched),
            found: pick(&|c| c.found),
            missed: pick(&|c| c.missed),
            cost: g
                .cells
                .iter()
                .map(|row| row.iter().map(|c| c.cost.whole_pounds()).collect())
                .collect(),
        });
    }
    to_json(&SaReport {
        options,
        cheapest_sg,
        levels,
    })
}

/// Decision-tree rollback, expected end counts of every scenario and a
/// plain-text rendering of the tree.
pub fn decision_tree_report(config_json: &str) -> Result<String, String> {
    let config = load(config_json)?;
    let tree = dtree::build_tree(&config.grid, &config.baseline, &config.cost_model)
        .map_err(|e| e.to_string())?;
    let (options, cheapest_sg) = options(&config, Method::Dt)?;
    let mut counts = Vec::new();
    for cell in config.grid.cells() {
        for option in &config.grid.search_growth {
            let s = Scenario::new(cell.tg, cell.cg, option.growth);
            let c = dtree::end_counts(&s, &config.baseline, &config.grid, &config.cost_model)
                .map_err(|e| e.to_string())?;
            counts.push(TreeCounts {
                tg: cell.tg,
                cg: cell.cg,
                sg: option.growth,
                counts: c,
            });
        }
    }
    let nodes = [
        dtree::NodeKind::Decision,
        dtree::NodeKind::Chance,
        dtree::NodeKind::Terminal,
    ]
    .into_iter()
    .map(|k| tree.count_nodes(k))
    .sum();
    to_json(&TreeReport {
        options,
        cheapest_sg,
        nodes,
        counts,
        text: dtree::to_text(&tree),
    })
}

/// One simulated replication of one scenario.
pub fn simulation_report(
    config_json: &str,
    mode: &str,
    tg: f64,
    cg: f64,
    sg: f64,
    seed: u64,
) -> Result<String, String> {
    let config = load(config_json)?;
    let mode: Mode = mode.parse().map_err(|e: screencost::Error| e.to_string())?;
    let scenario = Scenario::new(tg, cg, sg);
    let option = config
        .grid
        .search_option(sg)
        .map_err(|e| e.to_string())?
        .annual_cost;
    let routing =
        calibrate_routing(&scenario, &config.baseline, &config.grid).map_err(|e| e.to_string())?;
    let stats = run_replication(&run_config(mode, scenario, &config, seed), &routing)
        .map_err(|e| e.to_string())?;
    let cost =
        Money::from_pounds_f64(config.cost_model.missed_cost_pounds(stats.missed as f64)) + option;
    to_json(&SimReport {
        mode: mode.label(),
        scenario,
        seed,
        expected: routing.expected_exits(),
        stats,
        cost: cost.whole_pounds(),
    })
}

#[wasm_bindgen]
pub fn scenario_analysis(config_json: &str) -> Result<String, JsError> {
    scenario_analysis_report(config_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn decision_tree(config_json: &str) -> Result<String, JsError> {
    decision_tree_report(config_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(
    config_json: &str,
    mode: &str,
    tg: f64,
    cg: f64,
    sg: f64,
    seed: u64,
) -> Result<String, JsError> {
    simulation_report(config_json, mode, tg, cg, sg, seed).map_err(|e| JsError::new(&e))
}

/// Version of the underlying library.
#[wasm_bindgen]
pub fn version() -> String {
    screencost::VERSION.to_string()
}
