//! Runs every method over the default grid and prints expected costs.

use std::time::Instant;

use screencost::config::ToolConfig;
use screencost::experiment::{run_grid, Method};

fn main() -> screencost::Result<()> {
    let config = ToolConfig::default();
    for method in Method::ALL {
        let start = Instant::now();
        let result = run_grid(method, &config)?;
        let costs: Vec<String> = result
            .option_costs
            .iter()
            .map(|c| c.display_pounds())
            .collect();
        let bypass: f64 = result
            .cells
            .iter()
            .map(|c| c.probability * c.summary.metric("shed_bypassed").map_or(0.0, |s| s.mean))
            .sum::<f64>()
            / 3.0;
        println!(
            "{:6} {:?} cheapest sg={} bypass/opt={:.1} ({:.1?})",
            method.label(),
            costs,
            result.cheapest_growth(),
            bypass,
            start.elapsed()
        );
    }
    Ok(())
}
