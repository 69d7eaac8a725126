use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use resplan_core::factored_lp::*;
use resplan_core::fmdp::{CostFunction, FactoredModel, RewardFactor};
use resplan_core::generate::{random_scenario, RandomSpec};
use resplan_core::lp::{DenseSimplex, LpBackend, LpStatus};
use resplan_core::network::{Edge, Layer, Network, Node};
use resplan_core::{AlphaSpec, SystemState};

fn parametric(n: usize, edges: &[(usize, usize)], reward: f64) -> FactoredModel {
    let nodes =
        (0..n).map(|id| Node { id, name: format!("v{id}"), layer: Layer::Generic, base_reward: reward }).collect();
    let network = Network::new(nodes, edges.iter().map(|&(s, d)| Edge::new(s, d)).collect()).unwrap();
    FactoredModel::parametric(
        network,
        0.01,
        0.3,
        (0..n).map(|i| RewardFactor::gated(i, reward)).collect(),
        (0..n).map(|i| CostFunction { node: i, c0: 0.0, c1: 1.0 }).collect(),
        0.9,
        vec![true; n],
    )
    .unwrap()
}

fn random_model(seed: u64) -> FactoredModel {
    let n = 2 + (seed % 3) as usize;
    random_scenario(seed, &RandomSpec::new(n)).unwrap().model().unwrap()
}

fn lex(method: ConstraintMethod, order: OrderHeuristic) -> AlpConfig {
    AlpConfig { method, order, tie_break: TieBreak::Lexicographic, ..Default::default() }
}

#[test]
fn objective_examples() {
    let m = parametric(3, &[], 1.0);
    let e = build_objective(&m, AlphaSpec::Uniform, false);
    for i in 0..3 {
        assert_eq!(e.coefficient(LpVar::Weight(i)), 0.5);
    }
    assert_eq!(e.num_terms(), 3);
    let e = build_objective(&m, AlphaSpec::AllOnes, false);
    assert!((0..3).all(|i| e.coefficient(LpVar::Weight(i)) == 1.0));
    let e = build_objective(&parametric(1, &[], 1.0), AlphaSpec::Uniform, true);
    assert_eq!(e.coefficient(LpVar::Weight(0)), 0.5);
    assert_eq!(e.coefficient(LpVar::Bias), 1.0);
}

#[test]
fn factor_examples() {
    let f = collect_factors(&parametric(1, &[], 5.0));
    let scopes: Vec<Vec<Var>> = f.iter().map(|f| f.scope.clone()).collect();
    assert_eq!(scopes, vec![vec![Var::State(0)], vec![Var::Action(0)], vec![Var::State(0), Var::Action(0)]]);

    let f = collect_factors(&parametric(2, &[(0, 1)], 1.0));
    assert_eq!(f[5].scope, vec![Var::State(0), Var::State(1), Var::Action(1)]);
    assert_eq!(collect_factors(&parametric(5, &[(0, 1), (1, 2)], 1.0)).len(), 15);
}

#[test]
fn enumeration_examples() {
    assert_eq!(enumerate_constraints(&parametric(2, &[], 1.0), false).unwrap().constraints.len(), 16);
    assert_eq!(enumerate_constraints(&parametric(3, &[(0, 1), (1, 2)], 1.0), false).unwrap().constraints.len(), 64);

    // x = 1, a = 1: w₀ ≥ (5 − 1) + 0.9 w₀, i.e. −0.1 w₀ ≤ −4
    let set = enumerate_constraints(&parametric(1, &[], 5.0), false).unwrap();
    let c = &set.constraints[3];
    assert!((c.expr.coefficient(LpVar::Weight(0)) + 0.1).abs() < 1e-12);
    assert!((c.rhs + 4.0).abs() < 1e-12);

    let big = parametric(ENUMERATION_GUARD + 1, &[], 1.0);
    assert!(matches!(enumerate_constraints(&big, false), Err(AlpError::TooLarge { .. })));
}

#[test]
fn single_node_compilation() {
    let m = parametric(1, &[], 5.0);
    let factors = collect_factors(&m);
    let set = eliminate(factors, &[Var::Action(0), Var::State(0)]).unwrap();
    assert_eq!(set.constraints.len(), 7);
    assert_eq!(set.num_aux(), 3);
    assert!(set.constraints.len() <= set.size_bound());
}

#[test]
fn empty_factor_list() {
    let set = eliminate(Vec::new(), &[]).unwrap();
    assert_eq!(set.constraints.len(), 1);
    assert_eq!(set.num_aux(), 0);
    assert!(set.constraints[0].is_satisfied(|_| 0.0, 0.0));
}

#[test]
fn order_contract() {
    let factors = collect_factors(&parametric(1, &[], 5.0));
    assert!(matches!(eliminate(factors.clone(), &[Var::Action(0)]), Err(AlpError::Order(_))));
    assert!(matches!(eliminate(factors, &[Var::Action(0), Var::State(0), Var::State(0)]), Err(AlpError::Order(_))));
}

// V*(1) and V*(0) of the single node with r = 5, c = (0, 1), γ = 0.9,
// p0 = 0.01: idle while working, repair while failed.
#[test]
fn single_node_weights_match_closed_form() {
    let v1 = (5.0 - 0.9 * 0.01) / (1.0 - 0.9 * 0.99 - 0.9 * 0.01 * 0.9);
    let v0 = -1.0 + 0.9 * v1;
    assert!(5.0 - 1.0 + 0.9 * v1 < v1 && 0.9 * v0 < v0);
    let sol = solve_alp(&parametric(1, &[], 5.0), &AlpConfig::default(), &DenseSimplex::default()).unwrap();
    assert!((sol.bias - v0).abs() < 1e-8, "{} vs {v0}", sol.bias);
    assert!((sol.weights.get(0) - (v1 - v0)).abs() < 1e-8);
}

#[test]
fn chain_width() {
    let m = parametric(3, &[(0, 1), (1, 2)], 1.0);
    let factors = collect_factors(&m);
    let order = elimination_order(&factors, &OrderHeuristic::MinDegree);
    assert!(eliminate(factors, &order).unwrap().induced_width() <= 3);
}

#[test]
fn isolated_nodes_stay_narrow() {
    let factors = collect_factors(&parametric(4, &[], 1.0));
    let order = elimination_order(&factors, &OrderHeuristic::MinDegree);
    let set = eliminate(factors, &order).unwrap();
    assert!(set.steps.iter().all(|s| s.width <= 2));
}

#[test]
fn star_leaves_first() {
    let edges: Vec<(usize, usize)> = (1..4).map(|leaf| (leaf, 0)).collect();
    let m = parametric(4, &edges, 1.0);
    let factors = collect_factors(&m);
    let mut order: Vec<Var> = (1..4).flat_map(|i| [Var::Action(i), Var::State(i)]).collect();
    order.extend([Var::Action(0), Var::State(0)]);
    let set = eliminate(factors, &order).unwrap();
    // the gathered scope is Z plus the eliminated variable
    assert_eq!(set.induced_width(), m.scope(0).len());
}

#[test]
fn compiled_size_within_bound() {
    for seed in 0..20 {
        let (set, lp) = build_alp(&random_model(seed), &AlpConfig::default()).unwrap();
        assert!(set.constraints.len() <= set.size_bound(), "seed {seed}");
        assert_eq!(lp.rows.len(), set.constraints.len());
    }
}

#[test]
fn large_weights_are_feasible() {
    // with the constant basis, w₀ = R_max / (1 − γ) and w = 0 is a witness
    for seed in 0..20 {
        let m = random_model(seed);
        let bias = m.max_abs_reward() / (1.0 - m.gamma());
        let w = vec![0.0; m.n()];
        assert!(max_enumerated_violation(&m, &w, bias).unwrap() <= 1e-9, "seed {seed}");
    }
}

#[test]
fn indicator_witness_fails_without_constant_basis() {
    // a failed node keeps h = 0 whatever w is, so only the constant basis
    // can cover the value of a state with no working node
    let m = parametric(1, &[], 5.0);
    let w = m.max_abs_reward() / (1.0 - m.gamma());
    assert!(max_enumerated_violation(&m, &[w], 0.0).unwrap() > 0.0);
    let cfg = AlpConfig { constant_basis: false, ..Default::default() };
    assert!(matches!(solve_alp(&m, &cfg, &DenseSimplex::default()), Err(AlpError::Infeasible)));
}

#[test]
fn elimination_matches_enumeration_for_every_order() {
    for seed in 0..20 {
        let m = random_model(seed);
        let simplex = DenseSimplex::default();
        let reference = solve_alp(&m, &lex(ConstraintMethod::Enumerate, OrderHeuristic::MinDegree), &simplex).unwrap();
        let mut shuffled = elimination_order(&collect_factors(&m), &OrderHeuristic::Natural);
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for order in [
            OrderHeuristic::MinDegree,
            OrderHeuristic::MinFill,
            OrderHeuristic::Natural,
            OrderHeuristic::Given(shuffled.clone()),
        ] {
            let sol = solve_alp(&m, &lex(ConstraintMethod::Eliminate, order.clone()), &simplex).unwrap();
            assert!((sol.objective - reference.objective).abs() <= 1e-6, "seed {seed} {order:?}");
            for (a, b) in sol.weights.as_slice().iter().zip(reference.weights.as_slice()) {
                assert!((a - b).abs() <= 1e-6, "seed {seed} {order:?}: {:?} vs {:?}", sol.weights, reference.weights);
            }
            assert!((sol.bias - reference.bias).abs() <= 1e-6);
        }
    }
}

#[test]
fn compiled_weights_satisfy_every_enumerated_constraint() {
    for seed in 0..20 {
        let m = random_model(seed);
        let sol = solve_alp(&m, &AlpConfig::default(), &DenseSimplex::default()).unwrap();
        assert!(max_enumerated_violation(&m, sol.weights.as_slice(), sol.bias).unwrap() <= 1e-7, "seed {seed}");
    }
}

/// Minimizes `c₀ w₀ + Σ cᵢ wᵢ` over the projected region of each formulation.
fn optimum(m: &FactoredModel, method: ConstraintMethod, costs: &[f64]) -> Option<f64> {
    let cfg = AlpConfig { method, ..Default::default() };
    let (_, mut lp) = build_alp(m, &cfg).unwrap();
    lp.objective.iter_mut().for_each(|c| *c = 0.0);
    lp.objective[..costs.len()].copy_from_slice(costs);
    let sol = DenseSimplex::default().solve(&lp).unwrap();
    (sol.status == LpStatus::Optimal).then_some(sol.objective)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn projected_regions_agree(seed in 0u64..1000, raw in proptest::collection::vec(0.05f64..0.95, 4)) {
        let m = random_model(seed);
        let n = m.n();
        // weights first, then the constant weight with coefficient 1
        let mut costs: Vec<f64> = raw[..n].to_vec();
        costs.push(1.0);
        let a = optimum(&m, ConstraintMethod::Eliminate, &costs);
        let b = optimum(&m, ConstraintMethod::Enumerate, &costs);
        match (a, b) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{a} vs {b}"),
            (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
        }
    }

    #[test]
    fn compiled_lp_is_deterministic(seed in 0u64..1000) {
        let m = random_model(seed);
        let (a, la) = build_alp(&m, &AlpConfig::default()).unwrap();
        let (b, lb) = build_alp(&m, &AlpConfig::default()).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(la, lb);
    }
}

#[test]
fn value_adds_bias() {
    let m = parametric(2, &[], 1.0);
    let sol = solve_alp(&m, &AlpConfig::default(), &DenseSimplex::default()).unwrap();
    let x: SystemState = "11".parse().unwrap();
    assert!((sol.value(&x) - (sol.bias + sol.weights.get(0) + sol.weights.get(1))).abs() < 1e-12);
}
