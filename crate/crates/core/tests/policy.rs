use proptest::prelude::*;

use resplan_core::fmdp::{FactoredModel, SystemState};
use resplan_core::generate::{random_scenario, RandomSpec};
use resplan_core::policy::{
    budgeted_action, centralized_action, distributed_action, threshold_classify, Regime, CENTRALIZED_GUARD,
};
use resplan_core::{Scenario, Weights};

fn scenario(seed: u64, n: usize) -> Scenario {
    random_scenario(seed, &RandomSpec::new(n)).unwrap()
}

fn state(n: usize, bits: &[bool]) -> SystemState {
    let mut x = SystemState::all(n, false);
    for (i, &b) in bits.iter().take(n).enumerate() {
        x.set(i, b);
    }
    x
}

/// Cost gaps strictly inside each regime of node `i`, plus one between
/// every pair of adjacent pattern thresholds.
fn probe_gaps(model: &FactoredModel, w: &Weights, i: usize) -> Vec<f64> {
    let r = threshold_classify(model, w, i).unwrap();
    let mut cuts: Vec<f64> = r.patterns.iter().map(|p| p.threshold).collect();
    cuts.extend([0.0, r.healthy_threshold, r.faulty_threshold]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut gaps: Vec<f64> = cuts.windows(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    gaps.push(r.faulty_threshold + 1.0);
    gaps
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn distributed_is_centralized_optimum(
        seed in 0u64..10_000,
        n in 2usize..=12,
        weights in proptest::collection::vec(0.0f64..60.0, 12),
        states in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 12), 5),
    ) {
        let m = scenario(seed, n).model().unwrap();
        prop_assert!(m.assumption_check().all_hold());
        let w = Weights(weights[..n].to_vec());
        for bits in &states {
            let x = state(n, bits);
            let d = distributed_action(&m, &w, &x).unwrap();
            let c = centralized_action(&m, &w, &x).unwrap();
            let qd = m.q_value(w.as_slice(), &x, &d);
            let qc = m.q_value(w.as_slice(), &x, &c);
            prop_assert!((qd - qc).abs() <= 1e-12 * (1.0 + qc.abs()), "{qd} vs {qc}");
        }
    }

    #[test]
    fn regimes_predict_distributed_action(
        seed in 0u64..10_000,
        n in 2usize..=6,
        weights in proptest::collection::vec(0.5f64..60.0, 6),
    ) {
        let base = scenario(seed, n);
        let w = Weights(weights[..n].to_vec());
        let template = base.model().unwrap();
        for i in (0..n).filter(|&i| template.is_controllable(i)) {
            for gap in probe_gaps(&template, &w, i) {
                let mut sc = base.clone();
                let c0 = sc.costs[i].0;
                sc.costs[i] = (c0, c0 + gap);
                let m = sc.model().unwrap();
                let report = threshold_classify(&m, &w, i).unwrap();
                let scope = m.scope(i).to_vec();
                for code in 0..1usize << scope.len() {
                    let mut x = SystemState::all(n, true);
                    for (b, &j) in scope.iter().enumerate() {
                        x.set(j, code >> b & 1 == 1);
                    }
                    let acts = distributed_action(&m, &w, &x).unwrap().get(i);
                    prop_assert_eq!(acts, report.predicts_action(&m, code), "node {} gap {} code {}", i, gap, code);
                }
            }
        }
    }

    #[test]
    fn budget_of_n_is_unconstrained(
        seed in 0u64..10_000,
        n in 2usize..=8,
        weights in proptest::collection::vec(0.0f64..60.0, 8),
        bits in proptest::collection::vec(any::<bool>(), 8),
    ) {
        let m = scenario(seed, n).model().unwrap();
        let w = Weights(weights[..n].to_vec());
        let x = state(n, &bits);
        let full = distributed_action(&m, &w, &x).unwrap();
        prop_assert_eq!(budgeted_action(&m, &w, &x, n).unwrap(), full.clone());
        for b in 0..n {
            let a = budgeted_action(&m, &w, &x, b).unwrap();
            let active = (0..n).filter(|&i| a.get(i)).count();
            prop_assert!(active <= b);
            prop_assert!((0..n).all(|i| !a.get(i) || full.get(i)));
        }
    }

    #[test]
    fn thresholds_are_ordered(seed in 0u64..10_000, n in 2usize..=6, weights in proptest::collection::vec(0.0f64..60.0, 6)) {
        let m = scenario(seed, n).model().unwrap();
        let w = Weights(weights[..n].to_vec());
        for i in 0..n {
            let r = threshold_classify(&m, &w, i).unwrap();
            prop_assert!(r.healthy_threshold <= r.faulty_threshold);
            if let Some(d) = r.degraded_threshold {
                prop_assert!(r.healthy_threshold <= d + 1e-12 && d <= r.faulty_threshold);
            }
        }
    }
}

#[test]
fn every_regime_is_reachable() {
    let base = scenario(3, 4);
    let m = base.model().unwrap();
    let w = Weights(vec![20.0; 4]);
    let i = (0..4).find(|&i| m.is_controllable(i) && m.scope(i).len() > 1).unwrap();
    let mut seen = Vec::new();
    for gap in probe_gaps(&m, &w, i) {
        let mut sc = base.clone();
        sc.costs[i] = (0.0, gap);
        seen.push(threshold_classify(&sc.model().unwrap(), &w, i).unwrap().regime);
    }
    seen.dedup();
    assert_eq!(
        seen,
        [
            Regime::AlwaysMaintain,
            Regime::AlsoMaintainWhenNeighborsDegraded,
            Regime::RepairWhenFaultyOnly,
            Regime::NeverRepair
        ]
    );
}

#[test]
fn centralized_refuses_large_models() {
    let n = CENTRALIZED_GUARD + 5;
    let m = scenario(1, n).model().unwrap().with_controllable(vec![true; n]).unwrap();
    let w = Weights(vec![1.0; n]);
    let x = SystemState::all(n, true);
    assert!(centralized_action(&m, &w, &x).is_err());
    assert!(distributed_action(&m, &w, &x).is_ok());
}
