//! Closed-form scenario analysis.
//!
//! Found positives scale linearly with the searched fraction and missed
//! positives inversely, both proportional to clandestine growth. Costs are
//! the missed lorries priced by the [`CostModel`] plus the annual cost of
//! the search option.

use serde::Serialize;

use crate::scenario::{searched_fraction, BaselineCounts, CostModel, ScenarioFactorGrid};
use crate::{Error, Money, Result};

/// Expected UK detections: `uk_total·(sf/s0)·(1+cg)`.
pub fn found_positives(b: &BaselineCounts, tg: f64, sg: f64, cg: f64) -> Result<f64> {
    let sf = searched_fraction(b, tg, sg)?;
    Ok(b.found_uk_total() as f64 * (sf / b.base_search_fraction) * (1.0 + cg))
}

/// Expected misses: `missed·(s0/sf)·(1+cg)`.
pub fn missed_positives(b: &BaselineCounts, tg: f64, sg: f64, cg: f64) -> Result<f64> {
    let sf = searched_fraction(b, tg, sg)?;
    if sf == 0.0 {
        return Err(Error::Domain("searched fraction is zero".into()));
    }
    Ok(b.missed as f64 * (b.base_search_fraction / sf) * (1.0 + cg))
}

fn scenario_cost_pounds(
    b: &BaselineCounts,
    costs: &CostModel,
    grid: &ScenarioFactorGrid,
    tg: f64,
    sg: f64,
    cg: f64,
) -> Result<f64> {
    let option = grid.search_option(sg)?;
    let missed = missed_positives(b, tg, sg, cg)?;
    Ok(costs.missed_cost_pounds(missed) + option.annual_cost.pounds_f64())
}

/// Total annual cost of one scenario: missed lorries plus the search option.
///
/// This is the quantity tabulated for the cost grid; it includes the search
/// cost even where the grid is described as excluding it.
pub fn scenario_cost(
    b: &BaselineCounts,
    costs: &CostModel,
    grid: &ScenarioFactorGrid,
    tg: f64,
    sg: f64,
    cg: f64,
) -> Result<Money> {
    scenario_cost_pounds(b, costs, grid, tg, sg, cg).map(Money::from_pounds_f64)
}

/// Probability-weighted cost of search option `sg` over every `(tg, cg)`
/// cell.
pub fn expected_cost(
    sg: f64,
    grid: &ScenarioFactorGrid,
    b: &BaselineCounts,
    costs: &CostModel,
) -> Result<Money> {
    let mut total = 0.0;
    for cell in grid.cells() {
        total += cell.probability * scenario_cost_pounds(b, costs, grid, cell.tg, sg, cell.cg)?;
    }
    Ok(Money::from_pounds_f64(total))
}

/// Closed form of [`expected_cost`] under independence:
/// `cost·missed·E[1+tg]·E[1+cg]/(1+sg) + annual_cost(sg)`.
pub fn expected_cost_closed_form(
    sg: f64,
    grid: &ScenarioFactorGrid,
    b: &BaselineCounts,
    costs: &CostModel,
) -> Result<Money> {
    let option = grid.search_option(sg)?;
    let pounds = costs.missed_cost_pounds(b.missed as f64)
        * grid.mean_traffic_factor()
        * grid.mean_clandestine_factor()
        / (1.0 + sg)
        + option.annual_cost.pounds_f64();
    Ok(Money::from_pounds_f64(pounds))
}

/// Winner of a cost comparison and each option's excess over it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionRanking {
    pub best_index: usize,
    pub best_growth: f64,
    pub relative: Vec<Money>,
}

/// Picks the cheapest option. Ties go to the smaller search growth.
pub fn best_option(costs: &[(f64, Money)]) -> Result<OptionRanking> {
    let (best_index, &(best_growth, best_cost)) = costs
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .ok_or(Error::Empty("no search options to compare"))?;
    Ok(OptionRanking {
        best_index,
        best_growth,
        relative: costs.iter().map(|&(_, c)| c - best_cost).collect(),
    })
}

/// One `(tg, sg)` cell of a scenario-analysis grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaCell {
    pub tg: f64,
    pub sg: f64,
    pub searched: f64,
    pub found: f64,
    pub missed: f64,
    /// Found relative to the no-growth scenario at the same cg.
    pub found_ratio: f64,
    /// Missed relative to the no-growth scenario at the same cg.
    pub missed_ratio: f64,
    pub search_cost: Money,
    pub cost: Money,
}

/// Scenario-analysis results for every `(tg, sg)` pair at a fixed cg.
/// `cells[i][j]` is traffic level `i`, search option `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaGrid {
    pub cg: f64,
    pub tg_levels: Vec<f64>,
    pub sg_levels: Vec<f64>,
    pub cells: Vec<Vec<SaCell>>,
}

pub fn sa_grid(
    cg: f64,
    grid: &ScenarioFactorGrid,
    b: &BaselineCounts,
    costs: &CostModel,
) -> Result<SaGrid> {
    let base_found = b.found_uk_total() as f64 * (1.0 + cg);
    let base_missed = b.missed as f64 * (1.0 + cg);
    let mut cells = Vec::with_capacity(grid.traffic_growth.len());
    for tg in grid.traffic_growth.iter().map(|l| l.value) {
        let mut row = Vec::with_capacity(grid.search_growth.len());
        for option in &grid.search_growth {
            let sg = option.growth;
            let found = found_positives(b, tg, sg, cg)?;
            let missed = missed_positives(b, tg, sg, cg)?;
            row.push(SaCell {
                tg,
                sg,
                searched: searched_fraction(b, tg, sg)?,
                found,
                missed,
                found_ratio: found / base_found,
                missed_ratio: missed / base_missed,
                search_cost: option.annual_cost,
                cost: scenario_cost(b, costs, grid, tg, sg, cg)?,
            });
        }
        cells.push(row);
    }
    Ok(SaGrid {
        cg,
        tg_levels: grid.traffic_growth.iter().map(|l| l.value).collect(),
        sg_levels: grid.search_growth.iter().map(|o| o.growth).collect(),
        cells,
    })
}

/// Expected cost of every search option, in grid order.
pub fn option_costs(
    grid: &ScenarioFactorGrid,
    b: &BaselineCounts,
    costs: &CostModel,
) -> Result<Vec<(f64, Money)>> {
    grid.search_growth
        .iter()
        .map(|o| Ok((o.growth, expected_cost(o.growth, grid, b, costs)?)))
        .collect()
}
