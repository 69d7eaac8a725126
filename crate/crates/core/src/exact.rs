//! Exact solvers over the full state space, for small models.
//!
//! States are indexed by their code: bit `i` is node `i`, node 0 least
//! significant. Expectations `Σ_{x′} P(x′ | x, a) V(x′)` are computed by
//! folding `V` one node at a time with that node's survival probability,
//! which the product form of the transition allows. Folding over the action
//! bits as a tree gives every joint action's expectation in `O(n 2ⁿ)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::bits::bit;
use crate::fmdp::{ActionVector, FactoredModel, ModelError, SystemState};
use crate::lp::{Bounds, LpBackend, LpError, LpProblem, LpStatus, Sense};
use crate::scenario::AlphaSpec;

/// Largest model accepted by [`value_iteration`], [`greedy_from_values`] and [`evaluate_policy`].
pub const VALUE_ITERATION_GUARD: usize = 10;
/// Largest model accepted by [`solve_exact_lp`].
pub const EXACT_LP_GUARD: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("LP solver failed: {0}")]
    Lp(#[from] LpError),
    #[error("exact LP ended with status {0:?}")]
    Status(LpStatus),
    #[error("exact LP backend returned no row duals")]
    MissingDuals,
}

/// One value per state, in code order.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    n: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != 1usize << n {
            return Err(ModelError::Dimension { expected: 1 << n, got: values.len() });
        }
        Ok(ValueTable { n, values })
    }

    pub fn zeros(n: usize) -> Self {
        ValueTable { n, values: vec![0.0; 1 << n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn by_code(&self, code: usize) -> f64 {
        self.values[code]
    }

    pub fn get(&self, x: &SystemState) -> f64 {
        self.values[x.code()]
    }

    /// `(state, value)` pairs in code order.
    pub fn iter(&self) -> impl Iterator<Item = (SystemState, f64)> + '_ {
        self.values.iter().enumerate().map(move |(c, &v)| (SystemState::from_code(c, self.n), v))
    }

    /// `‖self − other‖∞`.
    pub fn max_abs_diff(&self, other: &ValueTable) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn guard(model: &FactoredModel, what: &'static str, limit: usize) -> Result<(), ModelError> {
    if model.n() > limit {
        Err(ModelError::TooLarge { what, n: model.n(), limit })
    } else {
        Ok(())
    }
}

/// Replaces `out` by `E[V(x′)]` with node `k` folded out: `out[c] = (1 − p) t[2c] + p t[2c + 1]`.
#[inline]
fn fold(table: &[f64], p: f64, out: &mut [f64]) {
    for (o, pair) in out.iter_mut().zip(table.chunks_exact(2)) {
        *o = (1.0 - p) * pair[0] + p * pair[1];
    }
}

/// Calls `f(a, E[V(x′) | x, a])` for every admissible action in
/// lexicographic order (node 0 first, idle before act).
fn for_each_expectation(
    model: &FactoredModel,
    x: &SystemState,
    v: &[f64],
    scratch: &mut [Vec<f64>],
    f: &mut impl FnMut(&ActionVector, f64),
) {
    let mut a = ActionVector::all(model.n(), false);
    recurse(model, x, 0, v, &mut a, scratch, f);
}

fn recurse(
    model: &FactoredModel,
    x: &SystemState,
    k: usize,
    table: &[f64],
    a: &mut ActionVector,
    scratch: &mut [Vec<f64>],
    f: &mut impl FnMut(&ActionVector, f64),
) {
    if k == model.n() {
        f(a, table[0]);
        return;
    }
    let choices: &[bool] = if model.is_controllable(k) { &[false, true] } else { &[false] };
    let (head, tail) = scratch.split_first_mut().expect("one scratch buffer per node");
    for &b in choices {
        a.set(k, b);
        fold(table, model.g_state(k, x, b), head);
        recurse(model, x, k + 1, head, a, tail, f);
    }
    a.set(k, false);
}

fn scratch_buffers(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|k| vec![0.0; 1 << (n - k - 1)]).collect()
}

fn action_cost(model: &FactoredModel, a: &ActionVector) -> f64 {
    model.costs().iter().map(|c| c.cost(a.get(c.node))).sum()
}

/// Greedy lookahead at `x`: returns the maximizing action and `(TV)(x)`.
fn lookahead(model: &FactoredModel, x: &SystemState, v: &[f64], scratch: &mut [Vec<f64>]) -> (ActionVector, f64) {
    let r = model.state_reward(x);
    let gamma = model.gamma();
    let mut best = ActionVector::all(model.n(), false);
    let mut best_q = f64::NEG_INFINITY;
    for_each_expectation(model, x, v, scratch, &mut |a, e| {
        let q = r - action_cost(model, a) + gamma * e;
        if q > best_q {
            best_q = q;
            best.clone_from(a);
        }
    });
    (best, best_q)
}

/// One application of the Bellman optimality operator.
pub fn bellman(model: &FactoredModel, v: &ValueTable) -> Result<ValueTable, ExactError> {
    guard(model, "Bellman operator", VALUE_ITERATION_GUARD)?;
    if v.n() != model.n() {
        return Err(ModelError::Dimension { expected: model.n(), got: v.n() }.into());
    }
    let n = model.n();
    let mut scratch = scratch_buffers(n);
    let values =
        (0..1usize << n).map(|c| lookahead(model, &SystemState::from_code(c, n), &v.values, &mut scratch).1).collect();
    Ok(ValueTable { n, values })
}

/// Iterates `V ← TV` from `V = 0` until the sup-norm change drops below
/// `tol (1 − γ) / γ`, which bounds the distance to `V*` by `tol`.
pub fn value_iteration(model: &FactoredModel, tol: f64) -> Result<ValueTable, ExactError> {
    guard(model, "value iteration", VALUE_ITERATION_GUARD)?;
    if !(tol > 0.0) {
        return Err(ExactError::Tolerance(tol));
    }
    let gamma = model.gamma();
    let stop = tol * (1.0 - gamma) / gamma;
    let mut v = ValueTable::zeros(model.n());
    loop {
        let next = bellman(model, &v)?;
        let change = next.max_abs_diff(&v);
        v = next;
        if change < stop {
            return Ok(v);
        }
    }
}

/// Exact one-step lookahead action at `x`; ties go to the lexicographically
/// smallest action.
pub fn greedy_from_values(model: &FactoredModel, v: &ValueTable, x: &SystemState) -> Result<ActionVector, ExactError> {
    guard(model, "greedy lookahead", VALUE_ITERATION_GUARD)?;
    if v.n() != model.n() || x.len() != model.n() {
        return Err(ModelError::Dimension { expected: model.n(), got: x.len().min(v.n()) }.into());
    }
    let mut scratch = scratch_buffers(model.n());
    Ok(lookahead(model, x, &v.values, &mut scratch).0)
}

/// Value of a deterministic stationary policy, to within `tol` in sup norm.
pub fn evaluate_policy(
    model: &FactoredModel,
    mut policy: impl FnMut(&SystemState) -> ActionVector,
    tol: f64,
) -> Result<ValueTable, ExactError> {
    guard(model, "policy evaluation", VALUE_ITERATION_GUARD)?;
    if !(tol > 0.0) {
        return Err(ExactError::Tolerance(tol));
    }
    let n = model.n();
    let gamma = model.gamma();
    let actions: Vec<ActionVector> = (0..1usize << n).map(|c| policy(&SystemState::from_code(c, n))).collect();
    let rewards: Vec<f64> = actions
        .iter()
        .enumerate()
        .map(|(c, a)| model.reward(&SystemState::from_code(c, n), a))
        .collect::<Result<_, _>>()?;
    let mut scratch = scratch_buffers(n);
    let stop = tol * (1.0 - gamma) / gamma;
    let mut v = vec![0.0; 1 << n];
    loop {
        let mut next = vec![0.0; 1 << n];
        for (c, a) in actions.iter().enumerate() {
            let x = SystemState::from_code(c, n);
            let mut table: &[f64] = &v;
            for (k, buf) in scratch.iter_mut().enumerate() {
                fold(table, model.g_state(k, &x, a.get(k)), buf);
                table = buf;
            }
            next[c] = rewards[c] + gamma * table[0];
        }
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if change < stop {
            return Ok(ValueTable { n, values: v });
        }
    }
}

/// Solves the exact LP `min Σ α(x) V(x)` s.t. `V(x) ≥ R(x, a) + γ E[V(x′)]`.
///
/// The LP is posed in its dual (occupancy) form, with one equality row per
/// state and one column per state-action pair, and `V` is read off the row
/// multipliers. Values are unique only where `α(x) > 0`.
pub fn solve_exact_lp(
    model: &FactoredModel,
    alpha: AlphaSpec,
    backend: &dyn LpBackend,
) -> Result<ValueTable, ExactError> {
    guard(model, "exact LP", EXACT_LP_GUARD)?;
    let n = model.n();
    let states = 1usize << n;
    let gamma = model.gamma();
    let ids = model.controllable_ids();
    let num_actions = 1usize << ids.len();

    // columns[s * num_actions + k] is μ(x_s, a_k)
    let mut columns: Vec<Vec<(usize, f64)>> = Vec::with_capacity(states * num_actions);
    let mut objective = Vec::with_capacity(states * num_actions);
    let mut a = ActionVector::all(n, false);
    for s in 0..states {
        let x = SystemState::from_code(s, n);
        for k in 0..num_actions {
            for (j, &i) in ids.iter().enumerate() {
                a.set(i, bit(k, j));
            }
            let mut col = vec![(s, 1.0)];
            for t in 0..states {
                let p = model.joint_transition_guarded(&x, &a, &SystemState::from_code(t, n), EXACT_LP_GUARD)?;
                if p != 0.0 {
                    match col.iter_mut().find(|(row, _)| *row == t) {
                        Some(entry) => entry.1 -= gamma * p,
                        None => col.push((t, -gamma * p)),
                    }
                }
            }
            columns.push(col);
            objective.push(-model.reward(&x, &a)?);
        }
    }
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); states];
    for (j, col) in columns.iter().enumerate() {
        for &(r, v) in col {
            rows[r].push((j, v));
        }
    }
    let mut lp = LpProblem::new(objective.len());
    lp.objective = objective;
    lp.bounds = vec![Bounds::NON_NEGATIVE; lp.num_vars()];
    for (s, row) in rows.into_iter().enumerate() {
        lp.add_row(row, Sense::Eq, alpha.weight(s, n));
    }
    let sol = backend.solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(ExactError::Status(sol.status));
    }
    if sol.duals.len() != states {
        return Err(ExactError::MissingDuals);
    }
    Ok(ValueTable { n, values: sol.duals.iter().map(|y| -y).collect() })
}
