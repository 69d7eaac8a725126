//! Approximate linear program over the indicator basis `hᵢ(x) = xᵢ`,
//! optionally extended by a constant basis function `h₀ ≡ 1`.
//!
//! ```text
//! min_w  Σ_x α(x) (w₀ + Σᵢ wᵢ xᵢ)
//! s.t.   0 ≥ R(x, a) − (1 − γ) w₀ + Σᵢ wᵢ (γ gᵢ(x, aᵢ) − xᵢ)     for all x, a
//! ```
//!
//! Without `h₀` the approximation is pinned to zero at the all-failed state,
//! and the constraint there with `aᵢ = 1` caps `γwᵢ` by the repair cost, so
//! repairing never pays off and the program is infeasible whenever it
//! should. The constant term does not depend on the action, so greedy
//! policies are unaffected by it.
//!
//! The exponential constraint family is either compiled by variable
//! elimination ([`eliminate`]) or, for small models, listed outright
//! ([`enumerate_constraints`]); the two are interchangeable oracles for one
//! another.

mod eliminate;
mod expr;
mod factor;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

pub use eliminate::{
    eliminate, elimination_order, Constraint, ConstraintSet, EliminationStep, OrderHeuristic, MAX_ELIMINATION_WIDTH,
};
pub use expr::{LinearExpr, LpVar};
pub use factor::{Factor, Var};

use crate::fmdp::{all_states, ActionVector, FactoredModel, SystemState};
use crate::lp::{Bounds, LpBackend, LpError, LpProblem, LpSolution, LpStatus, Sense};
use crate::scenario::AlphaSpec;

/// Largest model accepted by [`enumerate_constraints`].
pub const ENUMERATION_GUARD: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlpError {
    #[error("elimination order: {0}")]
    Order(String),
    #[error("eliminating {var} leaves a scope of {width} variables")]
    TooWide { var: String, width: usize },
    #[error("constraint enumeration needs n <= {limit}, model has {n} nodes")]
    TooLarge { n: usize, limit: usize },
    #[error("LP solver failed: {0}")]
    Lp(#[from] LpError),
    #[error("approximate LP is infeasible; without the constant basis function this happens whenever repairs are worthwhile")]
    Infeasible,
    #[error("approximate LP is unbounded below; state-relevance weights must be positive")]
    Unbounded,
}

/// One weight per indicator basis function; `V(x) ≈ Σ wᵢ xᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(pub Vec<f64>);

impl Weights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Approximate value `Σ wᵢ xᵢ`.
    pub fn value(&self, x: &SystemState) -> f64 {
        self.0.iter().enumerate().filter(|&(i, _)| x.get(i)).map(|(_, w)| w).sum()
    }
}

/// `Σᵢ μᵢ wᵢ` with `μᵢ = E_α[xᵢ]`, plus `w₀` with the constant basis.
pub fn build_objective(model: &FactoredModel, alpha: AlphaSpec, constant_basis: bool) -> LinearExpr {
    let mut e = LinearExpr::zero();
    for i in 0..model.n() {
        e.add_term(LpVar::Weight(i), alpha.mean_state(i));
    }
    if constant_basis {
        e.add_term(LpVar::Bias, 1.0);
    }
    e
}

/// `w₀ (γ − 1)`, the constant basis function's scope-free factor.
pub fn bias_factor(model: &FactoredModel) -> Factor {
    Factor { scope: Vec::new(), entries: vec![LinearExpr::term(LpVar::Bias, model.gamma() - 1.0)] }
}

/// `wᵢ (γ gᵢ − xᵢ)` over node `i`'s scope and, if controllable, its action.
pub fn g_bar_factor(model: &FactoredModel, i: usize) -> Factor {
    let scope = model.scope(i);
    let pos = model.self_position(i);
    let gamma = model.gamma();
    let controllable = model.is_controllable(i);
    let mut vars: Vec<Var> = scope.iter().map(|&j| Var::State(j)).collect();
    if controllable {
        vars.push(Var::Action(i));
    }
    let k = scope.len();
    Factor::from_fn(vars, |bits| {
        let code = bits[..k].iter().enumerate().fold(0, |acc, (b, &v)| acc | ((v as usize) << b));
        let action = controllable && bits[k];
        let h = if bits[pos] { 1.0 } else { 0.0 };
        LinearExpr::term(LpVar::Weight(i), gamma * model.g_code(i, code, action) - h)
    })
}

/// Reward, cost and `ḡ` factors for every node, in that order per node.
pub fn collect_factors(model: &FactoredModel) -> Vec<Factor> {
    let mut out = Vec::with_capacity(3 * model.n());
    for i in 0..model.n() {
        let r = &model.rewards()[i];
        let scope: Vec<Var> = r.scope.iter().map(|&j| Var::State(j)).collect();
        out.push(Factor { scope, entries: r.table.iter().map(|&v| LinearExpr::constant(v)).collect() });
        let c = model.cost(i);
        if model.is_controllable(i) {
            out.push(Factor {
                scope: vec![Var::Action(i)],
                entries: vec![LinearExpr::constant(-c.c0), LinearExpr::constant(-c.c1)],
            });
        } else {
            out.push(Factor::constant(-c.c0));
        }
        out.push(g_bar_factor(model, i));
    }
    out
}

/// Every action vector available to the model (uncontrollable bits zero),
/// in code order over the controllable nodes.
pub fn admissible_actions(model: &FactoredModel) -> impl Iterator<Item = ActionVector> + '_ {
    let ids = model.controllable_ids();
    let n = model.n();
    (0..1usize << ids.len()).map(move |code| {
        let mut a = ActionVector::all(n, false);
        for (k, &i) in ids.iter().enumerate() {
            a.set(i, crate::bits::bit(code, k));
        }
        a
    })
}

/// One constraint `Σᵢ wᵢ (γ gᵢ(x, a) − xᵢ) ≤ −R(x, a)` per state and
/// admissible action (with `−(1 − γ) w₀` on the left under the constant basis).
pub fn enumerate_constraints(model: &FactoredModel, constant_basis: bool) -> Result<ConstraintSet, AlpError> {
    let n = model.n();
    if n > ENUMERATION_GUARD {
        return Err(AlpError::TooLarge { n, limit: ENUMERATION_GUARD });
    }
    let mut out = ConstraintSet { num_weights: n, ..Default::default() };
    for x in all_states(n) {
        for a in admissible_actions(model) {
            let mut e = LinearExpr::constant(model.reward_unchecked(&x, &a));
            for i in 0..n {
                let h = if x.get(i) { 1.0 } else { 0.0 };
                e.add_term(LpVar::Weight(i), model.gamma() * model.g_state(i, &x, a.get(i)) - h);
            }
            if constant_basis {
                e.add_term(LpVar::Bias, model.gamma() - 1.0);
            }
            out.constraints.push(Constraint::non_positive(e));
        }
    }
    Ok(out)
}

/// Column of an LP variable: node weights, then the constant weight if
/// present, then auxiliaries.
pub fn column(v: LpVar, num_weights: usize, constant_basis: bool) -> usize {
    let shift = num_weights + constant_basis as usize;
    match v {
        LpVar::Weight(i) => i,
        LpVar::Bias => num_weights,
        LpVar::Aux(k) => shift + k,
    }
}

/// Display names of the LP columns, matching [`column`].
pub fn column_names(constraints: &ConstraintSet, num_weights: usize, constant_basis: bool) -> Vec<String> {
    let mut names: Vec<String> = (0..num_weights).map(|i| format!("{}", LpVar::Weight(i))).collect();
    if constant_basis {
        names.push(format!("{}", LpVar::Bias));
    }
    names.extend(constraints.aux_names.iter().cloned());
    names
}

/// LP over the columns of [`column`], all free.
pub fn to_lp_problem(
    constraints: &ConstraintSet,
    objective: &LinearExpr,
    num_weights: usize,
    constant_basis: bool,
) -> LpProblem {
    let col = |v: LpVar| column(v, num_weights, constant_basis);
    let num_vars = num_weights + constant_basis as usize + constraints.num_aux();
    let mut p = LpProblem::new(num_vars);
    p.bounds = vec![Bounds::FREE; num_vars];
    for (v, c) in objective.terms() {
        p.objective[col(v)] = c;
    }
    for c in &constraints.constraints {
        p.add_row(c.expr.terms().map(|(v, a)| (col(v), a)).collect(), c.sense, c.rhs);
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintMethod {
    /// Variable elimination over the factor graph.
    Eliminate,
    /// Brute-force listing of every `(x, a)` constraint.
    Enumerate,
}

/// Which optimal solution to return when the approximate LP has several.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    /// Whatever vertex the backend stops at.
    Backend,
    /// Within the optimal face, minimize `w₀`, then `w₁`, and so on, with
    /// the constant weight last. Both constraint methods then return the
    /// same weights. Costs one extra solve per weight.
    Lexicographic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlpConfig {
    pub alpha: AlphaSpec,
    pub order: OrderHeuristic,
    pub method: ConstraintMethod,
    /// Include the constant basis function `h₀ ≡ 1`.
    pub constant_basis: bool,
    pub tie_break: TieBreak,
}

impl Default for AlpConfig {
    fn default() -> Self {
        AlpConfig {
            alpha: AlphaSpec::Uniform,
            order: OrderHeuristic::MinDegree,
            method: ConstraintMethod::Eliminate,
            constant_basis: true,
            tie_break: TieBreak::Backend,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlpSolution {
    pub weights: Weights,
    /// Weight of the constant basis function; zero when it is disabled.
    pub bias: f64,
    pub objective: f64,
    pub status: LpStatus,
    pub num_constraints: usize,
    pub num_variables: usize,
    pub induced_width: usize,
    pub lp_iterations: usize,
    pub backend: String,
}

impl AlpSolution {
    /// Approximate value `w₀ + Σ wᵢ xᵢ`.
    pub fn value(&self, x: &SystemState) -> f64 {
        self.bias + self.weights.value(x)
    }
}

/// Compiles the constraint family requested by `config` together with the LP it induces.
pub fn build_alp(model: &FactoredModel, config: &AlpConfig) -> Result<(ConstraintSet, LpProblem), AlpError> {
    let set = match config.method {
        ConstraintMethod::Eliminate => {
            let mut factors = collect_factors(model);
            if config.constant_basis {
                factors.push(bias_factor(model));
            }
            let order = elimination_order(&factors, &config.order);
            eliminate(factors, &order)?
        }
        ConstraintMethod::Enumerate => enumerate_constraints(model, config.constant_basis)?,
    };
    let objective = build_objective(model, config.alpha, config.constant_basis);
    let lp = to_lp_problem(&set, &objective, model.n(), config.constant_basis);
    Ok((set, lp))
}

/// Solves the approximate LP and returns the basis weights.
pub fn solve_alp(model: &FactoredModel, config: &AlpConfig, backend: &dyn LpBackend) -> Result<AlpSolution, AlpError> {
    let (set, lp) = build_alp(model, config)?;
    let mut sol = backend.solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(AlpError::Infeasible),
        LpStatus::Unbounded => return Err(AlpError::Unbounded),
    }
    let n = model.n();
    if config.tie_break == TieBreak::Lexicographic {
        sol = lexicographic(&lp, sol, n + config.constant_basis as usize, backend)?;
    }
    Ok(AlpSolution {
        weights: Weights(sol.values[..n].to_vec()),
        bias: if config.constant_basis { sol.values[n] } else { 0.0 },
        objective: sol.objective,
        status: sol.status,
        num_constraints: lp.rows.len(),
        num_variables: lp.num_vars(),
        induced_width: set.induced_width(),
        lp_iterations: sol.iterations,
        backend: backend.name().into(),
    })
}

/// Relative slack allowed when pinning an optimum before the next stage.
const LEX_SLACK: f64 = 1e-9;

fn lexicographic(
    lp: &LpProblem,
    first: LpSolution,
    columns: usize,
    backend: &dyn LpBackend,
) -> Result<LpSolution, AlpError> {
    let mut p = lp.clone();
    let pin = |value: f64| value + LEX_SLACK * (1.0 + value.abs());
    let coeffs: Vec<(usize, f64)> =
        lp.objective.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(j, &c)| (j, c)).collect();
    p.add_row(coeffs, Sense::Le, pin(first.objective));
    let mut best = first;
    let mut iterations = best.iterations;
    for k in 0..columns {
        p.objective = vec![0.0; p.num_vars()];
        p.objective[k] = 1.0;
        let s = backend.solve(&p)?;
        iterations += s.iterations;
        // a direction the objective does not bound stays unresolved
        if s.status != LpStatus::Optimal {
            continue;
        }
        p.add_row(vec![(k, 1.0)], Sense::Le, pin(s.values[k]));
        best = s;
    }
    best.objective = lp.objective_value(&best.values);
    best.iterations = iterations;
    Ok(best)
}

/// Checks `(w₀, w)` against every enumerated constraint; returns the worst slack violation.
pub fn max_enumerated_violation(model: &FactoredModel, weights: &[f64], bias: f64) -> Result<f64, AlpError> {
    let set = enumerate_constraints(model, true)?;
    Ok(set
        .constraints
        .iter()
        .map(|c| {
            let lhs = c.expr.eval(|v| match v {
                LpVar::Weight(i) => weights[i],
                LpVar::Bias => bias,
                LpVar::Aux(_) => unreachable!("enumerated constraints have no auxiliaries"),
            });
            lhs - c.rhs
        })
        .fold(f64::NEG_INFINITY, f64::max))
}
