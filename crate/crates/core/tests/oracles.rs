use proptest::prelude::*;

use resplan_core::exact::{bellman, evaluate_policy, solve_exact_lp, value_iteration};
use resplan_core::factored_lp::{solve_alp, AlpConfig};
use resplan_core::fmdp::{all_states, FactoredModel};
use resplan_core::generate::{random_scenario, RandomSpec};
use resplan_core::lp::{Bounds, DenseSimplex, LpBackend, LpProblem, LpStatus, Sense};
use resplan_core::policy::distributed_action;
use resplan_core::AlphaSpec;

fn random_model(seed: u64) -> FactoredModel {
    let n = 2 + (seed % 3) as usize;
    random_scenario(seed, &RandomSpec::new(n)).unwrap().model().unwrap()
}

#[test]
fn alp_dominates_optimal_value() {
    for seed in 0..20 {
        let m = random_model(seed);
        let v = value_iteration(&m, 1e-8).unwrap();
        let lp = solve_exact_lp(&m, AlphaSpec::Uniform, &DenseSimplex::default()).unwrap();
        assert!(v.max_abs_diff(&lp) <= 1e-7, "seed {seed}: {}", v.max_abs_diff(&lp));
        let sol = solve_alp(&m, &AlpConfig::default(), &DenseSimplex::default()).unwrap();
        for (x, vx) in v.iter() {
            assert!(sol.value(&x) >= vx - 1e-6, "seed {seed} x {x}: {} < {vx}", sol.value(&x));
        }
    }
}

#[test]
fn value_iteration_is_a_fixed_point() {
    for seed in 0..10 {
        let m = random_model(seed);
        let v = value_iteration(&m, 1e-10).unwrap();
        assert!(bellman(&m, &v).unwrap().max_abs_diff(&v) <= 1e-9);
    }
}

#[test]
fn greedy_alp_policy_is_no_better_than_optimal() {
    for seed in 0..10 {
        let m = random_model(seed);
        let v = value_iteration(&m, 1e-9).unwrap();
        let sol = solve_alp(&m, &AlpConfig::default(), &DenseSimplex::default()).unwrap();
        let pi = evaluate_policy(&m, |x| distributed_action(&m, &sol.weights, x).unwrap(), 1e-9).unwrap();
        for x in all_states(m.n()) {
            assert!(pi.get(&x) <= v.get(&x) + 1e-7, "seed {seed}");
            assert!(pi.get(&x) <= sol.value(&x) + 1e-6);
        }
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (pivot_row, pivot_b) = (a[col].clone(), b[col]);
        for (r, (row, rhs)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
            if r != col {
                let f = row[col] / pivot_row[col];
                for c in col..n {
                    row[c] -= f * pivot_row[c];
                }
                *rhs -= f * pivot_b;
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Best objective over every basic feasible point of a bounded LP.
fn vertex_enumeration(p: &LpProblem) -> Option<f64> {
    let n = p.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = p
        .rows
        .iter()
        .map(|r| {
            let mut a = vec![0.0; n];
            for &(j, v) in &r.coeffs {
                a[j] += v;
            }
            (a, r.rhs)
        })
        .collect();
    for (j, b) in p.bounds.iter().enumerate() {
        for bound in [b.lower, b.upper] {
            if bound.is_finite() {
                let mut a = vec![0.0; n];
                a[j] = 1.0;
                planes.push((a, bound));
            }
        }
    }
    let mut best: Option<f64> = None;
    let m = planes.len();
    let mut pick = vec![0usize; n];
    fn next(pick: &mut [usize], m: usize) -> bool {
        let n = pick.len();
        for i in (0..n).rev() {
            if pick[i] < m - n + i {
                pick[i] += 1;
                for j in i + 1..n {
                    pick[j] = pick[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, slot) in pick.iter_mut().enumerate() {
        *slot = i;
    }
    loop {
        let a = pick.iter().map(|&k| planes[k].0.clone()).collect();
        let b = pick.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_square(a, b) {
            if p.max_violation(&x) <= 1e-7 {
                let z = p.objective_value(&x);
                best = Some(best.map_or(z, |b: f64| b.min(z)));
            }
        }
        if !next(&mut pick, m) {
            return best;
        }
    }
}

fn sense(k: u8) -> Sense {
    match k % 3 {
        0 => Sense::Le,
        1 => Sense::Ge,
        _ => Sense::Eq,
    }
}

prop_compose! {
    fn boxed_lp()(
        n in 1usize..4,
        rows in proptest::collection::vec(
            (proptest::collection::vec(-5i32..6, 3), 0u8..3, -10i32..11),
            0..5,
        ),
        costs in proptest::collection::vec(-5i32..6, 3),
        lower in proptest::collection::vec(-4i32..1, 3),
        span in proptest::collection::vec(1i32..6, 3),
    ) -> LpProblem {
        let mut p = LpProblem::new(n);
        p.objective = costs[..n].iter().map(|&c| c as f64).collect();
        p.bounds = (0..n).map(|j| Bounds { lower: lower[j] as f64, upper: (lower[j] + span[j]) as f64 }).collect();
        for (coeffs, k, rhs) in rows {
            let coeffs = coeffs[..n].iter().enumerate().filter(|(_, &a)| a != 0).map(|(j, &a)| (j, a as f64)).collect();
            p.add_row(coeffs, sense(k), rhs as f64);
        }
        p
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplex_matches_vertex_enumeration(p in boxed_lp()) {
        let sol = DenseSimplex::default().solve(&p).unwrap();
        match vertex_enumeration(&p) {
            Some(best) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - best).abs() <= 1e-6, "{} vs {}", sol.objective, best);
                prop_assert!(p.max_violation(&sol.values) <= 1e-7);
            }
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn bland_agrees_with_dantzig(p in boxed_lp()) {
        let a = DenseSimplex::default().solve(&p).unwrap();
        let b = DenseSimplex::bland(1e-9).solve(&p).unwrap();
        prop_assert_eq!(a.status, b.status);
        if a.status == LpStatus::Optimal {
            prop_assert!((a.objective - b.objective).abs() <= 1e-7);
        }
    }
}
