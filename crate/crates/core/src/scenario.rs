//! Shared scenario data and the calibration of a scenario into routing
//! probabilities.
//!
//! Every method in the crate reads from these types. The decision tree and
//! both simulation modes consume the same [`CalibratedRouting`], so their
//! expected exit counts coincide with the closed-form targets.

use serde::{Deserialize, Serialize};

use crate::{Error, Money, Result};

const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// One level of an uncertain growth factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthLevel {
    /// Relative change, `0.10` meaning +10%.
    pub value: f64,
    pub probability: f64,
}

impl GrowthLevel {
    pub const fn new(value: f64, probability: f64) -> Self {
        GrowthLevel { value, probability }
    }
}

/// A search-growth response and what it costs per year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchOption {
    pub growth: f64,
    pub annual_cost: Money,
}

impl SearchOption {
    pub const fn new(growth: f64, annual_cost: Money) -> Self {
        SearchOption {
            growth,
            annual_cost,
        }
    }
}

/// Traffic growth and clandestine growth levels (independent chance
/// factors) crossed with the search growth options (the decision).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFactorGrid {
    pub traffic_growth: Vec<GrowthLevel>,
    pub clandestine_growth: Vec<GrowthLevel>,
    pub search_growth: Vec<SearchOption>,
}

/// A `(tg, cg)` cell of the grid with its joint probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub tg_index: usize,
    pub cg_index: usize,
    pub tg: f64,
    pub cg: f64,
    pub probability: f64,
}

impl Default for ScenarioFactorGrid {
    fn default() -> Self {
        ScenarioFactorGrid::calais()
    }
}

impl ScenarioFactorGrid {
    /// Calais case-study grid: TG 0/10/20% at 0.25/0.5/0.25, CG −50/0/+25%
    /// equally likely, SG 0/10/20% costing £0/£5M/£10M.
    pub fn calais() -> Self {
        let third = 1.0 / 3.0;
        ScenarioFactorGrid {
            traffic_growth: vec![
                GrowthLevel::new(0.0, 0.25),
                GrowthLevel::new(0.10, 0.5),
                GrowthLevel::new(0.20, 0.25),
            ],
            clandestine_growth: vec![
                GrowthLevel::new(-0.50, third),
                GrowthLevel::new(0.0, third),
                GrowthLevel::new(0.25, third),
            ],
            search_growth: vec![
                SearchOption::new(0.0, Money::ZERO),
                SearchOption::new(0.10, Money::from_pounds(5_000_000)),
                SearchOption::new(0.20, Money::from_pounds(10_000_000)),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_levels("traffic_growth", &self.traffic_growth, |v| v > -1.0)?;
        check_levels("clandestine_growth", &self.clandestine_growth, |v| {
            v >= -1.0
        })?;
        if self.search_growth.is_empty() {
            return Err(Error::Calibration("search_growth has no options".into()));
        }
        for option in &self.search_growth {
            if !(option.growth > -1.0) {
                return Err(Error::Domain(format!(
                    "search growth {} must exceed -100%",
                    option.growth
                )));
            }
            if option.annual_cost < Money::ZERO {
                return Err(Error::Domain(format!(
                    "search option {} has negative cost",
                    option.growth
                )));
            }
        }
        Ok(())
    }

    /// All `(tg, cg)` cells in row-major order (tg outer), with joint
    /// probability `p(tg)·p(cg)`.
    pub fn cells(&self) -> impl Iterator<Item = GridCell> + '_ {
        self.traffic_growth
            .iter()
            .enumerate()
            .flat_map(move |(tg_index, tg)| {
                self.clandestine_growth
                    .iter()
                    .enumerate()
                    .map(move |(cg_index, cg)| GridCell {
                        tg_index,
                        cg_index,
                        tg: tg.value,
                        cg: cg.value,
                        probability: tg.probability * cg.probability,
                    })
            })
    }

    pub fn search_option(&self, sg: f64) -> Result<&SearchOption> {
        self.search_growth
            .iter()
            .find(|o| (o.growth - sg).abs() < 1e-12)
            .ok_or(Error::UnknownSearchOption(sg))
    }

    /// Expected value of `1 + tg` under the grid's probabilities.
    pub fn mean_traffic_factor(&self) -> f64 {
        self.traffic_growth
            .iter()
            .map(|l| l.probability * (1.0 + l.value))
            .sum()
    }

    pub fn mean_clandestine_factor(&self) -> f64 {
        self.clandestine_growth
            .iter()
            .map(|l| l.probability * (1.0 + l.value))
            .sum()
    }
}

fn check_levels(name: &str, levels: &[GrowthLevel], domain: impl Fn(f64) -> bool) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::Calibration(format!("{name} has no levels")));
    }
    for level in levels {
        if !(0.0..=1.0).contains(&level.probability) {
            return Err(Error::Calibration(format!(
                "{name} probability {} outside [0, 1]",
                level.probability
            )));
        }
        if !domain(level.value) {
            return Err(Error::Domain(format!(
                "{name} level {} outside its domain",
                level.value
            )));
        }
    }
    let sum: f64 = levels.iter().map(|l| l.probability).sum();
    if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(Error::Calibration(format!(
            "{name} probabilities sum to {sum}"
        )));
    }
    Ok(())
}

/// Annual counts observed at the checkpoint before any growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineCounts {
    pub total_lorries: u64,
    pub base_search_fraction: f64,
    pub found_france: u64,
    pub found_uk_shed: u64,
    pub found_uk_berth: u64,
    pub missed: u64,
}

impl Default for BaselineCounts {
    fn default() -> Self {
        BaselineCounts::calais()
    }
}

impl BaselineCounts {
    pub const fn calais() -> Self {
        BaselineCounts {
            total_lorries: 900_000,
            base_search_fraction: 0.33,
            found_france: 1_800,
            found_uk_shed: 890,
            found_uk_berth: 784,
            missed: 150,
        }
    }

    pub fn found_uk_total(&self) -> u64 {
        self.found_uk_shed + self.found_uk_berth
    }

    pub fn total_positives(&self) -> u64 {
        self.found_france + self.found_uk_total() + self.missed
    }

    pub fn validate(&self) -> Result<()> {
        let s0 = self.base_search_fraction;
        if !(s0 > 0.0 && s0 <= 1.0) {
            return Err(Error::Domain(format!(
                "base search fraction {s0} outside (0, 1]"
            )));
        }
        if self.total_lorries == 0 {
            return Err(Error::DegenerateBaseline("no lorries".into()));
        }
        if self.total_positives() > self.total_lorries {
            return Err(Error::DegenerateBaseline(
                "more positive lorries than lorries".into(),
            ));
        }
        Ok(())
    }
}

/// Conditional catch fractions at the three exit points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionChain {
    /// Found in France, out of all positives.
    pub france: f64,
    /// Found at the UK shed, out of positives that passed France.
    pub shed: f64,
    /// Found at the UK berth, out of positives that passed the shed.
    pub berth: f64,
}

impl DetectionChain {
    /// Exit counts obtained by pushing `positives` through the chain.
    pub fn apply(&self, positives: f64) -> ExitCounts {
        let france = positives * self.france;
        let past_france = positives - france;
        let shed = past_france * self.shed;
        let past_shed = past_france - shed;
        let berth = past_shed * self.berth;
        ExitCounts {
            france,
            shed,
            berth,
            missed: past_shed - berth,
        }
    }
}

/// Conditional detection fractions implied by the baseline counts.
pub fn baseline_detection_chain(b: &BaselineCounts) -> Result<DetectionChain> {
    chain_from_counts(
        b.found_france as f64,
        b.found_uk_shed as f64,
        b.found_uk_berth as f64,
        b.missed as f64,
    )
}

fn chain_from_counts(france: f64, shed: f64, berth: f64, missed: f64) -> Result<DetectionChain> {
    let total = france + shed + berth + missed;
    let past_france = total - france;
    let past_shed = past_france - shed;
    for (name, denominator) in [
        ("positives", total),
        ("positives past France", past_france),
        ("positives past the shed", past_shed),
    ] {
        if !(denominator > 0.0) {
            return Err(Error::DegenerateBaseline(format!("no {name}")));
        }
    }
    Ok(DetectionChain {
        france: france / total,
        shed: shed / past_france,
        berth: berth / past_shed,
    })
}

/// Expected annual counts of positive lorries by exit point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ExitCounts {
    pub france: f64,
    pub shed: f64,
    pub berth: f64,
    pub missed: f64,
}

impl ExitCounts {
    pub fn uk_total(&self) -> f64 {
        self.shed + self.berth
    }

    pub fn total(&self) -> f64 {
        self.france + self.shed + self.berth + self.missed
    }

    pub fn scaled(&self, factor: f64) -> ExitCounts {
        ExitCounts {
            france: self.france * factor,
            shed: self.shed * factor,
            berth: self.berth * factor,
            missed: self.missed * factor,
        }
    }
}

/// Costs attached to positive lorries that get through.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub cost_per_missed_lorry: Money,
    pub cost_per_clandestine: Money,
    pub clandestines_per_lorry: u32,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::calais()
    }
}

impl CostModel {
    /// £100,000 per clandestine (£20,000 a year over five years), four per
    /// lorry.
    pub const fn calais() -> Self {
        CostModel {
            cost_per_missed_lorry: Money::from_pounds(400_000),
            cost_per_clandestine: Money::from_pounds(100_000),
            clandestines_per_lorry: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let implied = self.cost_per_clandestine.pence() * i64::from(self.clandestines_per_lorry);
        if implied != self.cost_per_missed_lorry.pence() {
            return Err(Error::Calibration(format!(
                "cost per missed lorry {} differs from {} x {}",
                self.cost_per_missed_lorry, self.clandestines_per_lorry, self.cost_per_clandestine
            )));
        }
        if self.cost_per_missed_lorry < Money::ZERO {
            return Err(Error::Domain("negative cost per missed lorry".into()));
        }
        Ok(())
    }

    /// Cost of an expected number of missed lorries, in pounds.
    pub fn missed_cost_pounds(&self, missed: f64) -> f64 {
        missed * self.cost_per_missed_lorry.pounds_f64()
    }
}

/// One point of the scenario grid: the two growth factors plus a search option.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub tg: f64,
    pub cg: f64,
    pub sg: f64,
}

impl Scenario {
    pub const BASE: Scenario = Scenario {
        tg: 0.0,
        cg: 0.0,
        sg: 0.0,
    };

    pub const fn new(tg: f64, cg: f64, sg: f64) -> Self {
        Scenario { tg, cg, sg }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tg > -1.0) {
            return Err(Error::Domain(format!(
                "traffic growth {} <= -100%",
                self.tg
            )));
        }
        if !(self.sg > -1.0) {
            return Err(Error::Domain(format!("search growth {} <= -100%", self.sg)));
        }
        if !(self.cg >= -1.0) {
            return Err(Error::Domain(format!(
                "clandestine growth {} < -100%",
                self.cg
            )));
        }
        Ok(())
    }
}

/// Share of traffic searched once traffic grows by `tg` and searches by
/// `sg`: `s0·(1+sg)/(1+tg)`.
pub fn searched_fraction(baseline: &BaselineCounts, tg: f64, sg: f64) -> Result<f64> {
    if !(1.0 + tg > 0.0) {
        return Err(Error::Domain(format!(
            "traffic growth {tg} leaves no traffic"
        )));
    }
    let fraction = baseline.base_search_fraction * (1.0 + sg) / (1.0 + tg);
    if fraction > 1.0 {
        return Err(Error::Calibration(format!(
            "search fraction exceeds traffic ({fraction:.4} at tg={tg}, sg={sg})"
        )));
    }
    Ok(fraction)
}

/// Branch probabilities of the lorry flow for one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibratedRouting {
    /// Annual lorry volume, `N0·(1+tg)`.
    pub n_lorries: f64,
    pub p_positive: f64,
    pub p_found_france: f64,
    pub p_found_shed_given_past_france: f64,
    pub p_found_berth_given_past_shed: f64,
    /// Searched fraction relative to the baseline, `(1+sg)/(1+tg)`.
    pub search_ratio: f64,
    /// Expected exit counts the probabilities were fitted to.
    pub targets: ExitCounts,
}

impl CalibratedRouting {
    pub fn chain(&self) -> DetectionChain {
        DetectionChain {
            france: self.p_found_france,
            shed: self.p_found_shed_given_past_france,
            berth: self.p_found_berth_given_past_shed,
        }
    }

    /// Expected exits from chaining the probabilities over the volume.
    pub fn expected_exits(&self) -> ExitCounts {
        self.chain().apply(self.n_lorries * self.p_positive)
    }
}

/// Target annual exit counts for a scenario.
///
/// France detections scale with clandestine growth only. UK detections scale
/// with the searched-fraction ratio `r` and misses with `1/r`; both scale
/// with clandestine growth. The UK total splits between shed and berth in
/// the baseline ratio.
pub fn scenario_targets(s: &Scenario, b: &BaselineCounts) -> Result<ExitCounts> {
    s.validate()?;
    let ratio = searched_fraction(b, s.tg, s.sg)? / b.base_search_fraction;
    Ok(unit_targets(b, ratio).scaled(1.0 + s.cg))
}

fn unit_targets(b: &BaselineCounts, ratio: f64) -> ExitCounts {
    let uk = b.found_uk_total() as f64 * ratio;
    let shed_share = if b.found_uk_total() == 0 {
        0.0
    } else {
        b.found_uk_shed as f64 / b.found_uk_total() as f64
    };
    ExitCounts {
        france: b.found_france as f64,
        shed: uk * shed_share,
        berth: uk * (1.0 - shed_share),
        missed: b.missed as f64 / ratio,
    }
}

/// Fits routing probabilities so that expected exits over `N0·(1+tg)`
/// lorries equal [`scenario_targets`].
pub fn calibrate_routing(
    s: &Scenario,
    b: &BaselineCounts,
    grid: &ScenarioFactorGrid,
) -> Result<CalibratedRouting> {
    s.validate()?;
    b.validate()?;
    if !grid.search_growth.is_empty() {
        grid.search_option(s.sg)?;
    }
    let ratio = searched_fraction(b, s.tg, s.sg)? / b.base_search_fraction;
    let unit = unit_targets(b, ratio);
    // Conditional fractions do not depend on cg, so they are taken from the
    // unscaled targets; cg = -1 then stays well defined.
    let chain = chain_from_counts(unit.france, unit.shed, unit.berth, unit.missed)?;
    let targets = unit.scaled(1.0 + s.cg);
    let n_lorries = b.total_lorries as f64 * (1.0 + s.tg);
    let routing = CalibratedRouting {
        n_lorries,
        p_positive: targets.total() / n_lorries,
        p_found_france: chain.france,
        p_found_shed_given_past_france: chain.shed,
        p_found_berth_given_past_shed: chain.berth,
        search_ratio: ratio,
        targets,
    };
    for (branch, p) in [
        ("positive", routing.p_positive),
        ("found in France", routing.p_found_france),
        ("found at UK shed", routing.p_found_shed_given_past_france),
        ("found at UK berth", routing.p_found_berth_given_past_shed),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Calibration(format!(
                "branch `{branch}` has probability {p}"
            )));
        }
    }
    Ok(routing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn calais() -> (BaselineCounts, ScenarioFactorGrid) {
        (BaselineCounts::calais(), ScenarioFactorGrid::calais())
    }

    #[test]
    fn searched_fraction_examples() {
        let b = BaselineCounts::calais();
        assert_relative_eq!(
            searched_fraction(&b, 0.10, 0.0).unwrap(),
            0.30,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            searched_fraction(&b, 0.0, 0.0).unwrap(),
            0.33,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            searched_fraction(&b, 0.20, 0.10).unwrap(),
            0.3025,
            epsilon = 1e-12
        );
    }

    #[test]
    fn searched_fraction_errors() {
        let b = BaselineCounts::calais();
        assert!(matches!(
            searched_fraction(&b, -1.0, 0.0),
            Err(Error::Domain(_))
        ));
        match searched_fraction(&b, 0.0, 2.5) {
            Err(Error::Calibration(msg)) => {
                assert!(msg.contains("search fraction exceeds traffic"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn baseline_chain_matches_counts() {
        let b = BaselineCounts::calais();
        let chain = baseline_detection_chain(&b).unwrap();
        assert_relative_eq!(chain.france, 1800.0 / 3624.0, epsilon = 1e-15);
        assert_relative_eq!(chain.france, 0.496689, epsilon = 1e-6);
        assert_relative_eq!(chain.berth, 784.0 / 934.0, epsilon = 1e-15);
        assert_relative_eq!(chain.berth, 0.839400, epsilon = 1e-6);

        let exits = chain.apply(3624.0);
        assert_relative_eq!(exits.france, 1800.0, epsilon = 1e-9);
        assert_relative_eq!(exits.shed, 890.0, epsilon = 1e-9);
        assert_relative_eq!(exits.berth, 784.0, epsilon = 1e-9);
        assert_relative_eq!(exits.missed, 150.0, epsilon = 1e-9);
    }

    #[test]
    fn no_misses_means_berth_catches_all() {
        let b = BaselineCounts {
            missed: 0,
            ..BaselineCounts::calais()
        };
        assert_eq!(baseline_detection_chain(&b).unwrap().berth, 1.0);
    }

    #[test]
    fn degenerate_baseline_rejected() {
        let b = BaselineCounts {
            found_uk_berth: 0,
            missed: 0,
            ..BaselineCounts::calais()
        };
        assert!(matches!(
            baseline_detection_chain(&b),
            Err(Error::DegenerateBaseline(_))
        ));
    }

    #[test]
    fn calibrate_base_scenario() {
        let (b, g) = calais();
        let r = calibrate_routing(&Scenario::BASE, &b, &g).unwrap();
        let exits = r.expected_exits();
        assert_relative_eq!(
            exits.missed / r.n_lorries,
            150.0 / 900_000.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(r.p_positive, 3624.0 / 900_000.0, max_relative = 1e-12);
    }

    #[test]
    fn calibrate_more_search() {
        let (b, g) = calais();
        let r = calibrate_routing(&Scenario::new(0.0, 0.0, 0.10), &b, &g).unwrap();
        assert_relative_eq!(r.expected_exits().uk_total(), 1841.4, max_relative = 1e-9);
    }

    #[test]
    fn calibrate_halved_clandestines() {
        let (b, g) = calais();
        let base = calibrate_routing(&Scenario::BASE, &b, &g)
            .unwrap()
            .expected_exits();
        let half = calibrate_routing(&Scenario::new(0.0, -0.5, 0.0), &b, &g)
            .unwrap()
            .expected_exits();
        assert_relative_eq!(half.france, base.france / 2.0, max_relative = 1e-12);
        assert_relative_eq!(half.shed, base.shed / 2.0, max_relative = 1e-12);
        assert_relative_eq!(half.berth, base.berth / 2.0, max_relative = 1e-12);
        assert_relative_eq!(half.missed, base.missed / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn calibration_rejects_unknown_search_option() {
        let (b, g) = calais();
        assert!(matches!(
            calibrate_routing(&Scenario::new(0.0, 0.0, 0.15), &b, &g),
            Err(Error::UnknownSearchOption(_))
        ));
    }

    #[test]
    fn joint_probabilities_match_table() {
        let g = ScenarioFactorGrid::calais();
        let cells: Vec<_> = g.cells().collect();
        assert_eq!(cells.len(), 9);
        let sum: f64 = cells.iter().map(|c| c.probability).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let expected = [
            0.083, 0.083, 0.083, 0.167, 0.167, 0.167, 0.083, 0.083, 0.083,
        ];
        for (cell, want) in cells.iter().zip(expected) {
            assert!((cell.probability - want).abs() < 5e-4, "{cell:?}");
        }
    }

    #[test]
    fn probability_sum_checked() {
        let mut g = ScenarioFactorGrid::calais();
        g.traffic_growth = vec![
            GrowthLevel::new(0.0, 0.5),
            GrowthLevel::new(0.1, 0.5),
            GrowthLevel::new(0.2, 0.5),
        ];
        match g.validate() {
            Err(Error::Calibration(msg)) => assert!(msg.contains("sum to 1.5"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cost_model_consistency() {
        assert!(CostModel::calais().validate().is_ok());
        let bad = CostModel {
            clandestines_per_lorry: 3,
            ..CostModel::calais()
        };
        assert!(bad.validate().is_err());
    }
}
