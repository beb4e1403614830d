use proptest::prelude::*;

use screencost::analytic::{best_option, found_positives, missed_positives};
use screencost::config::{parse_config, ToolConfig};
use screencost::dtree::{build_tree, rollback};
use screencost::scenario::{calibrate_routing, BaselineCounts, Scenario};
use screencost::sim::station::UK_SHED;
use screencost::sim::{run_replication, sample_triangular, Mode, RunConfig, RunStats};
use screencost::Money;

fn run(mode: Mode, scenario: Scenario, config: &ToolConfig, horizon: f64, seed: u64) -> RunStats {
    let routing = calibrate_routing(&scenario, &config.baseline, &config.grid).unwrap();
    let mut rc = RunConfig::new(
        mode,
        scenario,
        config.simulation.network.clone(),
        config.simulation.peak_profile.clone(),
        seed,
    );
    rc.horizon = horizon;
    run_replication(&rc, &routing).unwrap()
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![
        Just(Mode::Des0),
        Just(Mode::Des1),
        Just(Mode::Des2),
        Just(Mode::Des3)
    ]
}

fn level() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.1), Just(0.2)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn found_and_missed_ratios_are_reciprocal(tg in -0.5f64..0.5, sg in -0.5f64..0.5, cg in -0.5f64..1.0) {
        let b = BaselineCounts::calais();
        let found = found_positives(&b, tg, sg, cg).unwrap() / (b.found_uk_total() as f64 * (1.0 + cg));
        let missed = missed_positives(&b, tg, sg, cg).unwrap() / (b.missed as f64 * (1.0 + cg));
        prop_assert!((found * missed - 1.0).abs() < 1e-9);
    }

    #[test]
    fn triangular_samples_stay_in_support_and_rise_with_u(
        lo in 0.0f64..1.0, width_a in 0.0f64..1.0, width_b in 0.01f64..1.0,
        u in 0.0f64..1.0, v in 0.0f64..1.0,
    ) {
        let (mode, hi) = (lo + width_a, lo + width_a + width_b);
        let (u, v) = if u <= v { (u, v) } else { (v, u) };
        let x = sample_triangular(lo, mode, hi, u).unwrap();
        let y = sample_triangular(lo, mode, hi, v).unwrap();
        prop_assert!(lo <= x && x <= y && y <= hi);
    }

    #[test]
    fn shifting_every_cost_keeps_the_cheapest_option(
        costs in prop::collection::vec(0i64..100_000_000, 2..6),
        shift in -50_000_000i64..50_000_000,
    ) {
        let options: Vec<(f64, Money)> = costs.iter().enumerate()
            .map(|(i, &c)| (i as f64 / 10.0, Money::from_pounds(c))).collect();
        let shifted: Vec<(f64, Money)> = options.iter()
            .map(|&(g, c)| (g, c + Money::from_pounds(shift))).collect();
        prop_assert_eq!(best_option(&options).unwrap().best_index, best_option(&shifted).unwrap().best_index);
    }

    #[test]
    fn shifting_tree_terminals_keeps_the_decision(shift in -1e9f64..1e9) {
        let config = ToolConfig::default();
        let mut tree = build_tree(&config.grid, &config.baseline, &config.cost_model).unwrap();
        let before = rollback(&tree).unwrap();
        tree.shift_terminals(shift);
        let after = rollback(&tree).unwrap();
        prop_assert_eq!(before.best_index, after.best_index);
        prop_assert!((after.value - before.value - shift).abs() < 1e-3 * shift.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn every_lorry_is_accounted_for(mode in mode(), tg in level(), cg in level(), sg in level(), seed in any::<u64>()) {
        let config = ToolConfig::default();
        let r = run(mode, Scenario::new(tg, cg, sg), &config, 72.0, seed);
        prop_assert_eq!(r.exits() + r.in_system, r.arrivals);
    }

    #[test]
    fn restricted_shed_never_exceeds_its_waiting_room(sg in level(), seed in any::<u64>()) {
        let config = ToolConfig::default();
        let capacity = config.simulation.network.stations[UK_SHED].restricted_capacity.unwrap();
        let r = run(Mode::Des3, Scenario::new(0.0, 0.0, sg), &config, 120.0, seed);
        prop_assert!(r.stations[UK_SHED].max_queue <= capacity);
    }

    #[test]
    fn same_seed_same_replication(mode in mode(), seed in any::<u64>()) {
        let config = ToolConfig::default();
        let a = run(mode, Scenario::BASE, &config, 48.0, seed);
        let b = run(mode, Scenario::BASE, &config, 48.0, seed);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn config_survives_a_json_round_trip(seed in any::<u64>(), reps in 1usize..50, horizon in 1.0f64..10_000.0) {
        let mut config = ToolConfig::default();
        config.root_seed = seed;
        config.replications.reps = reps;
        config.simulation.horizon_hours = horizon;
        let back = parse_config(&config.to_json()).unwrap();
        prop_assert_eq!(back.hash(), config.hash());
        prop_assert_eq!(back, config);
    }
}

fn mean_over_seeds(reps: u64, f: impl Fn(u64) -> f64) -> f64 {
    (0..reps).map(|s| f(1000 + s)).sum::<f64>() / reps as f64
}

#[test]
fn more_shed_bays_mean_fewer_bypasses() {
    let tight = ToolConfig::default();
    let mut roomy = tight.clone();
    roomy.simulation.network.stations[UK_SHED].servers += 4;
    let scenario = Scenario::new(0.0, 0.0, 0.2);
    let bypassed = |config: &ToolConfig| {
        mean_over_seeds(30, |seed| {
            run(Mode::Des3, scenario, config, 96.0, seed).stations[UK_SHED].bypassed as f64
        })
    };
    let (tight, roomy) = (bypassed(&tight), bypassed(&roomy));
    assert!(tight > 0.0);
    assert!(
        roomy < tight,
        "{roomy} bypasses with more bays, {tight} without"
    );
}

#[test]
fn restricted_queues_lose_shed_finds_at_high_search() {
    let config = ToolConfig::default();
    let scenario = Scenario::new(0.0, 0.0, 0.2);
    let shed = |mode| {
        mean_over_seeds(30, |seed| {
            run(mode, scenario, &config, 168.0, seed).shed_found as f64
        })
    };
    let (open, restricted) = (shed(Mode::Des0), shed(Mode::Des3));
    assert!(restricted < open, "DES3 {restricted} vs DES0 {open}");
}
