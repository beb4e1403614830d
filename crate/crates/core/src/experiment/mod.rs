//! Replication control, scenario-grid execution and cross-method comparison.

pub mod runner;
pub mod stats;

pub use runner::{
    cell_seed, compare, pilot, relative_costs, replications_for, run_config, run_grid,
    simulate_grid, CellResult, ComparisonRow, GridResult, Method, MethodComparison, SeedRecord,
};
pub use stats::{
    required_replications, summarize, summarize_runs, t_quantile, ReplicationSummary, Summary,
};
