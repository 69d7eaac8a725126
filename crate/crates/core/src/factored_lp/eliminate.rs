//! Compiles `0 ≥ max_{x,a} Σ_f f(x, a)` into polynomially many linear
//! constraints by maximizing out one variable at a time.
//!
//! Eliminating `v` gathers the factors that mention it, introduces one
//! auxiliary `u_z ≥ Σ f(z, v = b)` (both `b`) for every assignment `z` of
//! the remaining scope, and replaces the gathered factors by the table of
//! those auxiliaries. When both candidates are constants the maximum is
//! taken directly, and when they are identical the shared expression is
//! reused, so no auxiliary is created for that `z`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::expr::{LinearExpr, LpVar};
use super::factor::{Factor, Var};
use super::AlpError;
use crate::bits::bit;
use crate::lp::Sense;

/// Widest intermediate scope the compiler accepts.
pub const MAX_ELIMINATION_WIDTH: usize = 16;

/// `expr sense rhs`, with all variable terms in `expr`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub expr: LinearExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    /// `expr ≤ 0` with the constant moved to the right-hand side.
    pub fn non_positive(mut expr: LinearExpr) -> Self {
        let rhs = -expr.constant;
        expr.constant = 0.0;
        Constraint { expr, sense: Sense::Le, rhs }
    }

    pub fn is_satisfied(&self, lookup: impl FnMut(LpVar) -> f64, tol: f64) -> bool {
        let lhs = self.expr.eval(lookup);
        match self.sense {
            Sense::Le => lhs <= self.rhs + tol,
            Sense::Ge => lhs >= self.rhs - tol,
            Sense::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationStep {
    pub var: Var,
    pub gathered: usize,
    /// Size of the scope left after removing `var` (`|Z|`).
    pub width: usize,
    pub aux_created: usize,
    pub constraints_created: usize,
}

/// Linear constraints over the basis weights and auxiliary variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintSet {
    pub num_weights: usize,
    /// Names of the auxiliary variables, `u_{step}_{assignment}`.
    pub aux_names: Vec<String>,
    pub constraints: Vec<Constraint>,
    pub steps: Vec<EliminationStep>,
}

impl ConstraintSet {
    pub fn num_aux(&self) -> usize {
        self.aux_names.len()
    }

    /// Largest intermediate scope `|Z|` over all steps.
    pub fn induced_width(&self) -> usize {
        self.steps.iter().map(|s| s.width).max().unwrap_or(0)
    }

    /// `Σ_steps 2^(|Z|+1) + 1`, the most constraints elimination can emit.
    pub fn size_bound(&self) -> usize {
        self.steps.iter().filter(|s| s.gathered > 0).map(|s| 2usize << s.width).sum::<usize>() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrderHeuristic {
    /// Greedily eliminate the variable whose remaining scope is smallest.
    MinDegree,
    /// Greedily eliminate the variable whose elimination adds the fewest new
    /// interactions, then the smallest remaining scope.
    MinFill,
    /// Every action variable, then every state variable, ascending.
    Natural,
    Given(Vec<Var>),
}

/// Elimination order covering every variable that appears in `factors`.
///
/// The greedy heuristics work on the interaction graph, where two variables
/// are adjacent when some factor mentions both; eliminating `v` leaves the
/// scope `N(v)` and connects it pairwise. Ties go to the smaller variable.
pub fn elimination_order(factors: &[Factor], heuristic: &OrderHeuristic) -> Vec<Var> {
    let all: BTreeSet<Var> = factors.iter().flat_map(|f| f.scope.iter().copied()).collect();
    let min_fill = match heuristic {
        OrderHeuristic::Given(order) => return order.clone(),
        OrderHeuristic::Natural => {
            let (mut actions, states): (Vec<Var>, Vec<Var>) =
                all.into_iter().partition(|v| matches!(v, Var::Action(_)));
            actions.extend(states);
            return actions;
        }
        OrderHeuristic::MinDegree => false,
        OrderHeuristic::MinFill => true,
    };
    let mut adj: BTreeMap<Var, BTreeSet<Var>> = all.iter().map(|&v| (v, BTreeSet::new())).collect();
    for f in factors {
        for &u in &f.scope {
            for &v in &f.scope {
                if u != v {
                    adj.get_mut(&u).unwrap().insert(v);
                }
            }
        }
    }
    let fill = |adj: &BTreeMap<Var, BTreeSet<Var>>, v: Var| {
        let nb: Vec<Var> = adj[&v].iter().copied().collect();
        let mut missing = 0;
        for (k, a) in nb.iter().enumerate() {
            missing += nb[k + 1..].iter().filter(|b| !adj[a].contains(b)).count();
        }
        missing
    };
    let mut order = Vec::with_capacity(adj.len());
    while !adj.is_empty() {
        let mut best: Option<((usize, usize), Var)> = None;
        for (&v, nb) in &adj {
            let key = if min_fill { (fill(&adj, v), nb.len()) } else { (nb.len(), 0) };
            if best.is_none_or(|(k, _)| key < k) {
                best = Some((key, v));
            }
        }
        let (_, v) = best.unwrap();
        let nb = adj.remove(&v).unwrap();
        for a in &nb {
            let set = adj.get_mut(a).unwrap();
            set.remove(&v);
            set.extend(nb.iter().copied().filter(|b| b != a));
        }
        order.push(v);
    }
    order
}

/// Compiles `factors` with the elimination `order`.
///
/// The result is feasibility-equivalent to enumerating `0 ≥ Σ_f f(x, a)`
/// over every joint assignment: a weight vector satisfies the enumerated
/// family iff some auxiliary values complete it to a solution here.
pub fn eliminate(factors: Vec<Factor>, order: &[Var]) -> Result<ConstraintSet, AlpError> {
    let mut position = BTreeMap::new();
    for (k, &v) in order.iter().enumerate() {
        if position.insert(v, k).is_some() {
            return Err(AlpError::Order(format!("variable {v} appears twice in the elimination order")));
        }
    }
    let mut num_weights = 0;
    for f in &factors {
        if let Some(v) = f.scope.iter().find(|v| !position.contains_key(v)) {
            return Err(AlpError::Order(format!("variable {v} is missing from the elimination order")));
        }
        for e in &f.entries {
            for (var, _) in e.terms() {
                if let LpVar::Weight(i) = var {
                    num_weights = num_weights.max(i + 1);
                }
            }
        }
    }

    let mut pool = factors;
    let mut out = ConstraintSet { num_weights, ..Default::default() };
    for (step, &v) in order.iter().enumerate() {
        let (gathered, rest): (Vec<Factor>, Vec<Factor>) = pool.into_iter().partition(|f| f.contains(v));
        pool = rest;
        if gathered.is_empty() {
            out.steps.push(EliminationStep { var: v, gathered: 0, width: 0, aux_created: 0, constraints_created: 0 });
            continue;
        }
        let z: Vec<Var> = gathered
            .iter()
            .flat_map(|f| f.scope.iter().copied())
            .filter(|&u| u != v)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if z.len() > MAX_ELIMINATION_WIDTH {
            return Err(AlpError::TooWide { var: format!("{v}"), width: z.len() });
        }
        // For each gathered factor and scope slot: None = the eliminated variable, Some(k) = bit k of z.
        let slots: Vec<Vec<Option<usize>>> = gathered
            .iter()
            .map(|f| f.scope.iter().map(|&u| if u == v { None } else { z.binary_search(&u).ok() }).collect())
            .collect();
        let aux_before = out.aux_names.len();
        let constraints_before = out.constraints.len();
        let mut entries = Vec::with_capacity(1 << z.len());
        for zc in 0..1usize << z.len() {
            let candidates: [LinearExpr; 2] = [false, true].map(|b| {
                let mut sum = LinearExpr::zero();
                for (f, fs) in gathered.iter().zip(&slots) {
                    let idx = fs.iter().enumerate().fold(0, |acc, (k, slot)| {
                        let val = match slot {
                            None => b,
                            Some(zk) => bit(zc, *zk),
                        };
                        acc | ((val as usize) << k)
                    });
                    sum.add_assign(&f.entries[idx]);
                }
                sum
            });
            let [c0, c1] = candidates;
            if c0.is_constant() && c1.is_constant() {
                entries.push(LinearExpr::constant(c0.constant.max(c1.constant)));
            } else if c0 == c1 {
                entries.push(c0);
            } else {
                let u = LpVar::Aux(out.aux_names.len());
                out.aux_names.push(format!("u_{step}_{zc}"));
                for mut c in [c0, c1] {
                    c.add_term(u, -1.0);
                    out.constraints.push(Constraint::non_positive(c));
                }
                entries.push(LinearExpr::term(u, 1.0));
            }
        }
        out.steps.push(EliminationStep {
            var: v,
            gathered: gathered.len(),
            width: z.len(),
            aux_created: out.aux_names.len() - aux_before,
            constraints_created: out.constraints.len() - constraints_before,
        });
        pool.push(Factor { scope: z, entries });
    }

    let mut residual = LinearExpr::zero();
    for f in &pool {
        debug_assert!(f.scope.is_empty());
        residual.add_assign(&f.entries[0]);
    }
    out.constraints.push(Constraint::non_positive(residual));
    Ok(out)
}
