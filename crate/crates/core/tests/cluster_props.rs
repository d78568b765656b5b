mod common;

use std::collections::BTreeSet;

use common::*;
use fjcluster::clusters::{
    empirical_clusters, predicted_from, robustness_trials, verify_refinement, TrialOptions, GROUPING_TOL,
};
use fjcluster::design::{synthesize, validate_design};
use fjcluster::dynamics::steady_state;
use fjcluster::graph::ROW_SUM_TOL;
use fjcluster::ltp::analyze;
use fjcluster::classify_agents;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn persuaded_pairs_agree_for_any_weights(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (g, p) = no_oblivious_instance(&mut r, 15);
        let opts = TrialOptions { certify: true, ..Default::default() };
        let report = robustness_trials(&g, &p.stubborn(), 20, seed, &opts).unwrap();
        prop_assert!(report.all_passed(), "{:?}", report.counterexample.map(|c| c.reason));
    }

    #[test]
    fn degroot_predictions_refine(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = oblivious_instance(&mut r, 12, false, true);
        let report = robustness_trials(&inst.graph, &[], 10, seed, &TrialOptions::default()).unwrap();
        prop_assert!(report.all_passed(), "{:?}", report.counterexample.map(|c| c.reason));
    }

    #[test]
    fn persuaded_blocks_never_overlap(seed in any::<u64>()) {
        let mut r = rng(seed);
        let degroot = r.random_bool(0.3);
        let inst = oblivious_instance(&mut r, 14, false, degroot);
        let (g, p) = (inst.graph, inst.profile);
        let classes = classify_agents(&g, &p).unwrap();
        let report = analyze(&g, &classes).unwrap();
        let mut seen = BTreeSet::new();
        for (&lp, np) in report.ltp() {
            prop_assert!(seen.insert(lp));
            for &q in np {
                prop_assert!(seen.insert(q));
            }
        }
        let predicted = predicted_from(&classes, &report).unwrap();
        let x = steady_state(&g, &p).unwrap();
        let observed = empirical_clusters(x.x_star(), GROUPING_TOL).unwrap();
        prop_assert!(verify_refinement(&predicted, &observed).unwrap().refines());
    }

    #[test]
    fn empirical_blocks_are_tight(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..30);
        let levels: Vec<f64> = (0..4).map(|_| r.random_range(0.0..10.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| levels[r.random_range(0..4)] + r.random_range(0.0..1e-9)).collect();
        let c = empirical_clusters(&x, GROUPING_TOL).unwrap();
        for b in c.blocks() {
            for &i in b {
                for &j in b {
                    prop_assert!((x[i] - x[j]).abs() <= GROUPING_TOL);
                }
            }
        }
        let distinct: BTreeSet<u64> = x.iter().map(|v| levels.iter().position(|l| (l - v).abs() < 1e-6).unwrap() as u64).collect();
        prop_assert!(c.len() <= distinct.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn synthesized_designs_validate(seed in any::<u64>()) {
        let mut r = rng(seed);
        let spec = random_design(&mut r, 40, 8);
        let g = synthesize(&spec).unwrap();
        prop_assert!(g.validate_row_stochastic(ROW_SUM_TOL).is_valid());
        prop_assert!(g.is_weakly_connected());
        let v = validate_design(&g, &spec).unwrap();
        prop_assert!(v.is_valid(), "{:?}", v.discrepancy);

        // every cross-block edge lands on a designated agent
        for e in g.edges() {
            let bf = spec.blocks().iter().position(|b| b.contains(&e.from)).unwrap();
            let bt = spec.blocks().iter().position(|b| b.contains(&e.to)).unwrap();
            if bf != bt {
                prop_assert_eq!(spec.ltp()[bt], Some(e.to));
            }
        }
        let classes = classify_agents(&g, &spec.profile()).unwrap();
        let report = analyze(&g, &classes).unwrap();
        for (b, d) in spec.blocks().iter().zip(spec.ltp()) {
            if let (Some(d), true) = (d, b.len() > 1) {
                let mut rest: Vec<usize> = b.iter().copied().filter(|v| v != d).collect();
                rest.sort_unstable();
                prop_assert_eq!(report.persuaded_by(*d), Some(&rest[..]));
            }
        }
    }
}
