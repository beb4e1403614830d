#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{required_replications, summarize, summarize_runs, ReplicationSummary, Summary};
use crate::analytic::{self, best_option, OptionRanking};
use crate::config::{CostReduction, ToolConfig};
use crate::dtree;
use crate::scenario::{calibrate_routing, Scenario};
use crate::sim::rng::replication_seed;
use crate::sim::{run_replication, Mode, RunConfig, RunStats};
use crate::{Error, Money, Result};

/// One of the evaluation methods compared side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    Sa,
    Dt,
    Sim(Mode),
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Sa,
        Method::Dt,
        Method::Sim(Mode::Mc),
        Method::Sim(Mode::Des0),
        Method::Sim(Mode::Des1),
        Method::Sim(Mode::Des2),
        Method::Sim(Mode::Des3),
    ];

    /// Row label in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Sa => "SA",
            Method::Dt => "DT",
            Method::Sim(Mode::Mc) => "MCS",
            Method::Sim(Mode::Des0) => "DES 0",
            Method::Sim(Mode::Des1) => "DES 1",
            Method::Sim(Mode::Des2) => "DES 2",
            Method::Sim(Mode::Des3) => "DES 3",
        }
    }

    /// Name mixed into replication seeds.
    pub fn seed_key(self) -> &'static str {
        match self {
            Method::Sa => "SA",
            Method::Dt => "DT",
            Method::Sim(mode) => mode.label(),
        }
    }
}

/// A replication's identity and seed, published so any run can be redone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub tg_index: usize,
    pub cg_index: usize,
    pub sg_index: usize,
    pub rep: usize,
    pub seed: u64,
}

/// Simulation output of one `(tg, cg, sg)` scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub tg_index: usize,
    pub cg_index: usize,
    pub sg_index: usize,
    pub scenario: Scenario,
    pub probability: f64,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunStats>,
    pub summary: ReplicationSummary,
    pub cost: Money,
}

impl CellResult {
    pub fn found(&self) -> &Summary {
        self.summary.metric("uk_found").expect("always summarized")
    }

    pub fn missed(&self) -> &Summary {
        self.summary.metric("missed").expect("always summarized")
    }
}

/// A method's answer over the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub method: Method,
    pub sg_levels: Vec<f64>,
    pub tg_levels: Vec<f64>,
    /// Expected cost per search option.
    pub option_costs: Vec<Money>,
    pub ranking: OptionRanking,
    /// Expected UK detections at cg = 0, `[tg][sg]`. Empty if the grid has
    /// no zero clandestine-growth level.
    pub found_cg0: Vec<Vec<f64>>,
    /// Standard error of each `found_cg0` entry (zero for SA and DT).
    pub found_cg0_se: Vec<Vec<f64>>,
    /// Decision-tree count minus this method's count at cg = 0.
    pub error_vs_dt: Vec<Vec<f64>>,
    /// Per-scenario simulation results, sorted by (tg, cg, sg).
    pub cells: Vec<CellResult>,
}

impl GridResult {
    pub fn seeds(&self) -> Vec<SeedRecord> {
        self.cells
            .iter()
            .flat_map(|c| {
                c.seeds
                    .iter()
                    .enumerate()
                    .map(move |(rep, &seed)| SeedRecord {
                        tg_index: c.tg_index,
                        cg_index: c.cg_index,
                        sg_index: c.sg_index,
                        rep,
                        seed,
                    })
            })
            .collect()
    }

    pub fn cheapest_growth(&self) -> f64 {
        self.ranking.best_growth
    }
}

/// Evaluates every search option with `method`.
pub fn run_grid(method: Method, config: &ToolConfig) -> Result<GridResult> {
    config.grid.validate()?;
    let with_context = |e: Error| e.context(format!("method {}", method.label()));
    let dt_cg0 = found_grid_dt(config).map_err(with_context)?;
    let (option_costs, found_cg0, found_cg0_se, cells) = match method {
        Method::Sa => {
            let costs = analytic::option_costs(&config.grid, &config.baseline, &config.cost_model)
                .map_err(with_context)?;
            let found = found_grid_sa(config).map_err(with_context)?;
            let se = zeros_like(&found);
            (
                costs.into_iter().map(|(_, c)| c).collect(),
                found,
                se,
                Vec::new(),
            )
        }
        Method::Dt => {
            let tree = dtree::build_tree(&config.grid, &config.baseline, &config.cost_model)
                .map_err(with_context)?;
            let rollback = dtree::rollback(&tree).map_err(with_context)?;
            let se = zeros_like(&dt_cg0);
            (rollback.option_costs(), dt_cg0.clone(), se, Vec::new())
        }
        Method::Sim(mode) => {
            let cells = simulate_grid(mode, config)?;
            let costs = option_costs_from_cells(&cells, config);
            let (found, se) = found_grid_sim(&cells, config);
            (costs, found, se, cells)
        }
    };
    let sg_levels: Vec<f64> = config.grid.search_growth.iter().map(|o| o.growth).collect();
    let pairs: Vec<(f64, Money)> = sg_levels
        .iter()
        .copied()
        .zip(option_costs.iter().copied())
        .collect();
    let ranking = best_option(&pairs)?;
    let error_vs_dt = dt_cg0
        .iter()
        .zip(&found_cg0)
        .map(|(d, m)| d.iter().zip(m).map(|(d, m)| d - m).collect())
        .collect();
    Ok(GridResult {
        method,
        sg_levels,
        tg_levels: config.grid.traffic_growth.iter().map(|l| l.value).collect(),
        option_costs,
        ranking,
        found_cg0,
        found_cg0_se,
        error_vs_dt,
        cells,
    })
}

fn zeros_like(grid: &[Vec<f64>]) -> Vec<Vec<f64>> {
    grid.iter().map(|row| vec![0.0; row.len()]).collect()
}

fn zero_cg_index(config: &ToolConfig) -> Option<usize> {
    config
        .grid
        .clandestine_growth
        .iter()
        .position(|l| l.value == 0.0)
}

fn found_grid_sa(config: &ToolConfig) -> Result<Vec<Vec<f64>>> {
    if zero_cg_index(config).is_none() {
        return Ok(Vec::new());
    }
    let grid = analytic::sa_grid(0.0, &config.grid, &config.baseline, &config.cost_model)?;
    Ok(grid
        .cells
        .iter()
        .map(|row| row.iter().map(|c| c.found).collect())
        .collect())
}

fn found_grid_dt(config: &ToolConfig) -> Result<Vec<Vec<f64>>> {
    if zero_cg_index(config).is_none() {
        return Ok(Vec::new());
    }
    config
        .grid
        .traffic_growth
        .iter()
        .map(|tg| {
            config
                .grid
                .search_growth
                .iter()
                .map(|o| {
                    let s = Scenario::new(tg.value, 0.0, o.growth);
                    Ok(
                        dtree::end_counts(&s, &config.baseline, &config.grid, &config.cost_model)?
                            .uk_total(),
                    )
                })
                .collect()
        })
        .collect()
}

fn found_grid_sim(cells: &[CellResult], config: &ToolConfig) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let Some(cg0) = zero_cg_index(config) else {
        return (Vec::new(), Vec::new());
    };
    let rows = config.grid.traffic_growth.len();
    let cols = config.grid.search_growth.len();
    let mut found = vec![vec![0.0; cols]; rows];
    let mut se = vec![vec![0.0; cols]; rows];
    for cell in cells.iter().filter(|c| c.cg_index == cg0) {
        found[cell.tg_index][cell.sg_index] = cell.found().mean;
        se[cell.tg_index][cell.sg_index] = cell.found().std_error();
    }
    (found, se)
}

/// Applies `f` to every job, in parallel when enabled, keeping job order.
fn map_jobs<J: Sync, R: Send>(
    jobs: &[J],
    f: impl Fn(&J) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    #[cfg(feature = "parallel")]
    return jobs.par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return jobs.iter().map(f).collect();
}

/// Seed of replication `rep` in the `(tg, cg)` cell, shared by every search
/// option of that cell.
pub fn cell_seed(
    method: Method,
    config: &ToolConfig,
    tg_index: usize,
    cg_index: usize,
    rep: usize,
) -> u64 {
    let cell = tg_index * config.grid.clandestine_growth.len() + cg_index;
    replication_seed(config.root_seed, method.seed_key(), cell as u64, rep as u64)
}

/// Runs every scenario of the grid `config.replications.reps` times.
pub fn simulate_grid(mode: Mode, config: &ToolConfig) -> Result<Vec<CellResult>> {
    let method = Method::Sim(mode);
    let reps = config.replications.reps;
    let mut jobs = Vec::new();
    for cell in config.grid.cells() {
        for (sg_index, option) in config.grid.search_growth.iter().enumerate() {
            for rep in 0..reps {
                jobs.push((cell, sg_index, option.growth, rep));
            }
        }
    }
    let runs: Vec<(u64, RunStats)> = map_jobs(&jobs, |&(cell, _, sg, rep)| {
        let scenario = Scenario::new(cell.tg, cell.cg, sg);
        let seed = cell_seed(method, config, cell.tg_index, cell.cg_index, rep);
        let context = |e: Error| {
            e.context(format!(
                "{} tg={} cg={} sg={} rep {rep}",
                mode.label(),
                cell.tg,
                cell.cg,
                sg
            ))
        };
        let routing =
            calibrate_routing(&scenario, &config.baseline, &config.grid).map_err(context)?;
        let run = run_config(mode, scenario, config, seed);
        run_replication(&run, &routing)
            .map(|r| (seed, r))
            .map_err(context)
    })?;

    let mut results = Vec::new();
    for (chunk_index, chunk) in runs.chunks(reps).enumerate() {
        let (cell, sg_index, sg, _) = jobs[chunk_index * reps];
        let seeds = chunk.iter().map(|(s, _)| *s).collect();
        let stats: Vec<RunStats> = chunk.iter().map(|(_, r)| r.clone()).collect();
        let summary = summarize_runs(&stats)?;
        let cost = cell_cost(&stats, &summary, sg, config)?;
        results.push(CellResult {
            tg_index: cell.tg_index,
            cg_index: cell.cg_index,
            sg_index,
            scenario: Scenario::new(cell.tg, cell.cg, sg),
            probability: cell.probability,
            seeds,
            runs: stats,
            summary,
            cost,
        });
    }
    Ok(results)
}

pub fn run_config(mode: Mode, scenario: Scenario, config: &ToolConfig, seed: u64) -> RunConfig {
    let mut run = RunConfig::new(
        mode,
        scenario,
        config.simulation.network.clone(),
        config.simulation.peak_profile.clone(),
        seed,
    );
    run.horizon = config.simulation.horizon_hours;
    run
}

fn cell_cost(
    runs: &[RunStats],
    summary: &ReplicationSummary,
    sg: f64,
    config: &ToolConfig,
) -> Result<Money> {
    let search = config.grid.search_option(sg)?.annual_cost.pounds_f64();
    let pounds = match config.cost_reduction {
        CostReduction::MeanMissed => {
            let missed = summary.metric("missed").expect("always summarized").mean;
            config.cost_model.missed_cost_pounds(missed) + search
        }
        CostReduction::PerReplication => {
            let costs: Vec<f64> = runs
                .iter()
                .map(|r| config.cost_model.missed_cost_pounds(r.missed as f64) + search)
                .collect();
            summarize(&costs)?.mean
        }
    };
    Ok(Money::from_pounds_f64(pounds))
}

fn option_costs_from_cells(cells: &[CellResult], config: &ToolConfig) -> Vec<Money> {
    (0..config.grid.search_growth.len())
        .map(|sg_index| {
            let pounds: f64 = cells
                .iter()
                .filter(|c| c.sg_index == sg_index)
                .map(|c| c.probability * c.cost.pounds_f64())
                .sum();
            Money::from_pounds_f64(pounds)
        })
        .collect()
}

/// Runs `reps` replications of one scenario, seeded apart from grid runs.
pub fn pilot(
    mode: Mode,
    scenario: Scenario,
    config: &ToolConfig,
    reps: usize,
) -> Result<ReplicationSummary> {
    let routing = calibrate_routing(&scenario, &config.baseline, &config.grid)?;
    let reps: Vec<u64> = (0..reps as u64).collect();
    let runs = map_jobs(&reps, |&rep| {
        let seed = replication_seed(config.root_seed, "pilot", 0, rep);
        run_replication(&run_config(mode, scenario, config, seed), &routing)
    })?;
    summarize_runs(&runs)
}

/// Replications needed for UK detections of `scenario` to reach the
/// configured relative precision, sized from a pilot of `pilot_reps`.
pub fn replications_for(
    mode: Mode,
    scenario: Scenario,
    config: &ToolConfig,
    pilot_reps: usize,
) -> Result<usize> {
    let summary = pilot(mode, scenario, config, pilot_reps)?;
    let found = summary.metric("uk_found").expect("always summarized");
    required_replications(found, config.replications.relative_precision)
}

/// One row of the cross-method comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: Method,
    pub costs: Vec<Money>,
    pub cheapest: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodComparison {
    pub sg_levels: Vec<f64>,
    pub rows: Vec<ComparisonRow>,
}

impl MethodComparison {
    pub fn from_results(results: &[GridResult]) -> Result<Self> {
        let first = results
            .first()
            .ok_or(Error::Empty("no methods to compare"))?;
        Ok(MethodComparison {
            sg_levels: first.sg_levels.clone(),
            rows: results
                .iter()
                .map(|r| ComparisonRow {
                    method: r.method,
                    costs: r.option_costs.clone(),
                    cheapest: r.ranking.best_index,
                })
                .collect(),
        })
    }

    pub fn row(&self, method: Method) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Runs each method over the grid and tabulates expected costs.
pub fn compare(
    methods: &[Method],
    config: &ToolConfig,
) -> Result<(MethodComparison, Vec<GridResult>)> {
    let results = methods
        .iter()
        .map(|&m| run_grid(m, config))
        .collect::<Result<Vec<_>>>()?;
    Ok((MethodComparison::from_results(&results)?, results))
}

/// Each row minus its own minimum.
pub fn relative_costs(comparison: &MethodComparison) -> Vec<Vec<Money>> {
    comparison
        .rows
        .iter()
        .map(|row| {
            let min = row.costs.iter().copied().min().unwrap_or(Money::ZERO);
            row.costs.iter().map(|&c| c - min).collect()
        })
        .collect()
}
