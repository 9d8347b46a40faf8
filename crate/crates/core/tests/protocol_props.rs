use std::collections::BTreeSet;
use std::f64::consts::PI;

use phasechain::config::ScenarioConfig;
use phasechain::consensus::{predicted_detection, simulate, summarize, CreatorStrategy, Inconsistency, Network};
use phasechain::encoding::{BlockCodec, PhaseSchedule};
use phasechain::quantum::RandomSource;
use proptest::prelude::*;

fn sched() -> PhaseSchedule {
    PhaseSchedule::new(PI / 5.0, 2).unwrap()
}

fn liars(nodes: usize) -> impl Strategy<Value = BTreeSet<usize>> {
    prop::collection::btree_set(0..nodes, 0..=(nodes - 1) / 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn honest_rounds_keep_chains_in_agreement(
        (nodes, liars) in (3usize..10).prop_flat_map(|n| (Just(n), liars(n))),
        k in 2usize..12,
        seed in any::<u64>(),
        rounds in 1usize..4,
    ) {
        let mut cfg = ScenarioConfig::new(sched(), nodes, seed);
        cfg.k = k;
        cfg.dishonest_validators = liars.clone();
        let mut net = Network::from_config(&cfg, &BlockCodec::identity()).unwrap();
        let mut rng = RandomSource::new(seed, 0);
        for _ in 0..rounds {
            let (o, next) = net.round(k, &CreatorStrategy::Honest, &mut rng).unwrap();
            prop_assert!(o.ledger.balances());
            prop_assert_eq!(o.ledger.delivered, nodes * k);
            prop_assert_eq!(o.ledger.measured, nodes * (k - 1));
            if liars.contains(&o.creator) {
                // a liar creating honestly still lies in its own vote
                prop_assert!(o.admissible || o.blacklist.is_empty());
            } else {
                prop_assert!(o.admissible);
                prop_assert_eq!(&o.blacklist, &liars);
            }
            let honest: Vec<usize> = o.appended.iter().copied().filter(|n| !liars.contains(n)).collect();
            if let Some(&first) = honest.first() {
                let reference = next.profiles[first].chain.realize().unwrap();
                for &n in &honest {
                    let f = next.profiles[n].chain.realize().unwrap().fidelity(&reference).unwrap();
                    prop_assert!((f - 1.0).abs() < 1e-12);
                }
            }
            net = next;
        }
    }

    #[test]
    fn string_splitting_is_always_caught(
        (nodes, subset) in (3usize..9).prop_flat_map(|n| (Just(n), prop::collection::btree_set(0..n, 1..n))),
        seed in any::<u64>(),
    ) {
        let mut cfg = ScenarioConfig::new(sched(), nodes, seed);
        cfg.creator_strategy = CreatorStrategy::DifferentStrings { nodes: subset };
        let net = Network::from_config(&cfg, &BlockCodec::identity()).unwrap();
        let (o, _) = net.round(cfg.k, &cfg.creator_strategy, &mut RandomSource::new(seed, 1)).unwrap();
        let caught = o
            .inconsistencies
            .iter()
            .any(|i| matches!(i, Inconsistency::StringDisagreement { .. }));
        prop_assert!(caught);
        prop_assert!(!o.admissible);
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>(), trials in 1u64..20) {
        let mut cfg = ScenarioConfig::new(sched(), 5, seed);
        cfg.trials = trials;
        cfg.creator_strategy = CreatorStrategy::WrongPhaseSubset { delta: 0.7, nodes: BTreeSet::from([0, 2]) };
        let a = simulate(&cfg, &BlockCodec::identity()).unwrap();
        let b = simulate(&cfg, &BlockCodec::identity()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn state_string_mismatch_is_detected() {
    let mut cfg = ScenarioConfig::new(sched(), 5, 12);
    cfg.k = 9;
    cfg.trials = 400;
    cfg.creator_strategy = CreatorStrategy::StateStringMismatch;
    let s = summarize(&cfg, &simulate(&cfg, &BlockCodec::identity()).unwrap());
    // every check on a mismatched copy fails with probability ≥ 1/2
    assert!(s.detection.value.unwrap() > 1.0 - 0.5f64.powi(8) - 0.01);
    assert!(s.false_accept.value.unwrap() < 0.01);
}

#[test]
fn detection_matches_closed_form_for_small_kicks() {
    let delta = PI / 6.0;
    let mut cfg = ScenarioConfig::new(sched(), 5, 21);
    cfg.k = 9;
    cfg.trials = 4000;
    cfg.record_events = false;
    cfg.creator_strategy = CreatorStrategy::WrongPhaseAll { delta };
    let s = summarize(&cfg, &simulate(&cfg, &BlockCodec::identity()).unwrap());
    let expected = predicted_detection(delta, 8);
    let d = s.detection.value.unwrap();
    assert!((d - expected).abs() <= 4.0 * s.detection.stderr.unwrap().max(1e-3), "{d} vs {expected}");
}
