//! The factored MDP: local transition tables, factored rewards and costs.
//!
//! Node `i` moves to the working state with probability
//! `P(Xᵢ′ = 1 | x_scope(i), aᵢ)`, independently of every other node given the
//! current state. Explicit tables are flat arrays indexed by
//! `scope_code + aᵢ · 2^|scope|`, where `scope_code` has bit `k` set when the
//! `k`-th scope member (ascending node id) is working.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::bits::{bit, powi};
use crate::network::Network;

/// Largest `n` for which [`FactoredModel::joint_transition`] is allowed by default.
pub const JOINT_TRANSITION_GUARD: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("expected a vector of length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("scope assignment for node {node} has {got} entries, scope has {expected}")]
    Scope { node: usize, expected: usize, got: usize },
    #[error("node index {index} out of range for {n} nodes")]
    Index { index: usize, n: usize },
    #[error("{what} needs n <= {limit}, model has {n} nodes")]
    TooLarge { what: &'static str, n: usize, limit: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
}

macro_rules! bit_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(Vec<bool>);

        impl $name {
            pub fn from_bits(bits: Vec<bool>) -> Self {
                $name(bits)
            }

            pub fn all(n: usize, value: bool) -> Self {
                $name(vec![value; n])
            }

            /// Decodes `code` with node 0 as the least significant bit.
            pub fn from_code(code: usize, n: usize) -> Self {
                $name((0..n).map(|k| bit(code, k)).collect())
            }

            /// Inverse of [`Self::from_code`]; only meaningful for `n < usize::BITS`.
            pub fn code(&self) -> usize {
                self.0.iter().enumerate().fold(0, |acc, (k, &b)| acc | ((b as usize) << k))
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            #[inline]
            pub fn get(&self, i: usize) -> bool {
                self.0[i]
            }

            pub fn set(&mut self, i: usize, value: bool) {
                self.0[i] = value;
            }

            pub fn bits(&self) -> &[bool] {
                &self.0
            }

            pub fn count_ones(&self) -> usize {
                self.0.iter().filter(|&&b| b).count()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                for &b in &self.0 {
                    f.write_str(if b { "1" } else { "0" })?;
                }
                Ok(())
            }
        }

        /// Parses a string of `0`/`1` characters, node 0 first.
        impl FromStr for $name {
            type Err = ModelError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                s.chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(ModelError::Invalid(format!("bit string contains {other:?}"))),
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map($name)
            }
        }
    };
}

bit_vector!(
    /// Working status of every node (`true` = works normally).
    SystemState
);
bit_vector!(
    /// Per-node action (`true` = repair if failed, maintain if working).
    ActionVector
);

#[derive(Debug, Clone, PartialEq)]
pub enum CptKind {
    /// Repair always succeeds, a failed node stays failed, and a working
    /// node survives with probability `(1 - p0)(1 - pc)^f` where `f` is the
    /// number of failed parents.
    Parametric { p0: f64, pc: f64 },
    /// Survival probabilities indexed by `scope_code + a · 2^|scope|`.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalCpt {
    pub node: usize,
    pub scope: Vec<usize>,
    pub kind: CptKind,
}

impl LocalCpt {
    /// Probability that the node works next step. `scope_code` indexes the
    /// scope assignment; the node's own bit sits at `self_pos`.
    fn survival(&self, scope_code: usize, self_pos: usize, action: bool) -> f64 {
        match &self.kind {
            CptKind::Parametric { p0, pc } => {
                if action {
                    1.0
                } else if !bit(scope_code, self_pos) {
                    0.0
                } else {
                    let failed = self.scope.len() - scope_code.count_ones() as usize;
                    (1.0 - p0) * powi(1.0 - pc, failed)
                }
            }
            CptKind::Explicit(table) => table[scope_code + ((action as usize) << self.scope.len())],
        }
    }
}

/// Local reward `rᵢ(x_scope)`, non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardFactor {
    pub node: usize,
    pub scope: Vec<usize>,
    pub table: Vec<f64>,
}

impl RewardFactor {
    /// `value` whenever the node itself works, zero otherwise.
    pub fn gated(node: usize, value: f64) -> Self {
        RewardFactor { node, scope: vec![node], table: vec![0.0, value] }
    }

    /// `value` only when every node in `scope` works.
    pub fn all_working(node: usize, mut scope: Vec<usize>, value: f64) -> Self {
        scope.sort_unstable();
        scope.dedup();
        let mut table = vec![0.0; 1 << scope.len()];
        *table.last_mut().unwrap() = value;
        RewardFactor { node, scope, table }
    }

    pub fn eval(&self, x: &SystemState) -> f64 {
        self.table[scope_code(&self.scope, x)]
    }

    pub fn max_value(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.table.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostFunction {
    pub node: usize,
    pub c0: f64,
    pub c1: f64,
}

impl CostFunction {
    #[inline]
    pub fn cost(&self, action: bool) -> f64 {
        if action {
            self.c1
        } else {
            self.c0
        }
    }

    pub fn gap(&self) -> f64 {
        self.c1 - self.c0
    }
}

/// Assignment code of `scope` under `x` (first scope member = bit 0).
pub fn scope_code(scope: &[usize], x: &SystemState) -> usize {
    scope.iter().enumerate().fold(0, |acc, (k, &j)| acc | ((x.get(j) as usize) << k))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssumptionReport {
    /// Local transitions ignore other nodes' actions.
    pub a1: bool,
    /// Reward separates into local rewards minus local costs.
    pub a2: bool,
    /// Repair is effective, failed nodes stay failed, cascading strictness.
    pub a3: bool,
    pub violations: Vec<String>,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.a1 && self.a2 && self.a3
    }
}

/// Tolerance used when checking the structural 0/1 rows of explicit tables.
const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FactoredModel {
    network: Network,
    cpts: Vec<LocalCpt>,
    rewards: Vec<RewardFactor>,
    costs: Vec<CostFunction>,
    gamma: f64,
    controllable: Vec<bool>,
    self_pos: Vec<usize>,
}

impl FactoredModel {
    pub fn new(
        network: Network,
        cpts: Vec<LocalCpt>,
        rewards: Vec<RewardFactor>,
        costs: Vec<CostFunction>,
        gamma: f64,
        controllable: Vec<bool>,
    ) -> Result<Self, ModelError> {
        let n = network.len();
        let invalid = |msg: String| Err(ModelError::Invalid(msg));
        if !(gamma > 0.0 && gamma < 1.0) {
            return invalid(format!("gamma must lie in (0, 1), got {gamma}"));
        }
        if cpts.len() != n || rewards.len() != n || costs.len() != n || controllable.len() != n {
            return invalid(format!(
                "need one cpt, reward, cost and controllable flag per node ({n}); got {}, {}, {}, {}",
                cpts.len(),
                rewards.len(),
                costs.len(),
                controllable.len()
            ));
        }
        let mut self_pos = Vec::with_capacity(n);
        for i in 0..n {
            let scope = network.neighborhood(i).expect("index in range");
            let cpt = &cpts[i];
            if cpt.node != i || cpt.scope != scope {
                return invalid(format!("cpt {i} must cover node {i} with scope {scope:?}"));
            }
            match &cpt.kind {
                CptKind::Parametric { p0, pc } => {
                    if !(0.0..=1.0).contains(p0) || !(0.0..=1.0).contains(pc) {
                        return invalid(format!("node {i}: p0 and pc must lie in [0, 1]"));
                    }
                }
                CptKind::Explicit(table) => {
                    let want = 2usize << scope.len();
                    if table.len() != want {
                        return invalid(format!("node {i}: explicit cpt needs {want} entries, got {}", table.len()));
                    }
                    if table.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return invalid(format!("node {i}: cpt probabilities must lie in [0, 1]"));
                    }
                }
            }
            let r = &rewards[i];
            if r.node != i || r.scope.iter().any(|j| !scope.contains(j)) {
                return invalid(format!("reward factor {i} must belong to node {i} and stay inside scope {scope:?}"));
            }
            if r.scope.windows(2).any(|w| w[0] >= w[1]) {
                return invalid(format!("reward factor {i}: scope must be strictly ascending"));
            }
            if r.table.len() != 1 << r.scope.len() {
                return invalid(format!("reward factor {i}: table needs {} entries", 1usize << r.scope.len()));
            }
            if r.table.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return invalid(format!("reward factor {i}: values must be finite and non-negative"));
            }
            let c = &costs[i];
            if c.node != i || !(c.c0 >= 0.0) || !(c.c1 >= c.c0) || !c.c1.is_finite() {
                return invalid(format!("cost {i}: need c1 >= c0 >= 0, got ({}, {})", c.c0, c.c1));
            }
            self_pos.push(scope.iter().position(|&j| j == i).unwrap());
        }
        Ok(FactoredModel { network, cpts, rewards, costs, gamma, controllable, self_pos })
    }

    /// Parametric cascade dynamics on every node.
    pub fn parametric(
        network: Network,
        p0: f64,
        pc: f64,
        rewards: Vec<RewardFactor>,
        costs: Vec<CostFunction>,
        gamma: f64,
        controllable: Vec<bool>,
    ) -> Result<Self, ModelError> {
        let cpts = (0..network.len())
            .map(|i| LocalCpt {
                node: i,
                scope: network.neighborhood(i).unwrap().to_vec(),
                kind: CptKind::Parametric { p0, pc },
            })
            .collect();
        FactoredModel::new(network, cpts, rewards, costs, gamma, controllable)
    }

    pub fn n(&self) -> usize {
        self.network.len()
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn cpts(&self) -> &[LocalCpt] {
        &self.cpts
    }

    pub fn rewards(&self) -> &[RewardFactor] {
        &self.rewards
    }

    pub fn costs(&self) -> &[CostFunction] {
        &self.costs
    }

    pub fn cost(&self, i: usize) -> &CostFunction {
        &self.costs[i]
    }

    pub fn is_controllable(&self, i: usize) -> bool {
        self.controllable[i]
    }

    pub fn controllable(&self) -> &[bool] {
        &self.controllable
    }

    pub fn controllable_ids(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.controllable[i]).collect()
    }

    /// Scope of node `i`'s transition table.
    pub fn scope(&self, i: usize) -> &[usize] {
        &self.cpts[i].scope
    }

    /// Position of node `i` inside its own scope.
    pub fn self_position(&self, i: usize) -> usize {
        self.self_pos[i]
    }

    /// Returns a copy with a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self, ModelError> {
        FactoredModel::new(
            self.network.clone(),
            self.cpts.clone(),
            self.rewards.clone(),
            self.costs.clone(),
            gamma,
            self.controllable.clone(),
        )
    }

    /// Returns a copy with a different controllable set.
    pub fn with_controllable(&self, controllable: Vec<bool>) -> Result<Self, ModelError> {
        FactoredModel::new(
            self.network.clone(),
            self.cpts.clone(),
            self.rewards.clone(),
            self.costs.clone(),
            self.gamma,
            controllable,
        )
    }

    fn check_node(&self, i: usize) -> Result<(), ModelError> {
        if i < self.n() {
            Ok(())
        } else {
            Err(ModelError::Index { index: i, n: self.n() })
        }
    }

    fn check_len(&self, len: usize) -> Result<(), ModelError> {
        if len == self.n() {
            Ok(())
        } else {
            Err(ModelError::Dimension { expected: self.n(), got: len })
        }
    }

    /// `P(Xᵢ′ = 1 | x_scope, aᵢ)` with `x_scope` listed in canonical scope order.
    pub fn local_transition(&self, i: usize, x_scope: &[bool], a_i: bool) -> Result<f64, ModelError> {
        self.check_node(i)?;
        let scope = self.scope(i);
        if x_scope.len() != scope.len() {
            return Err(ModelError::Scope { node: i, expected: scope.len(), got: x_scope.len() });
        }
        let code = x_scope.iter().enumerate().fold(0, |acc, (k, &b)| acc | ((b as usize) << k));
        Ok(self.cpts[i].survival(code, self.self_pos[i], a_i))
    }

    /// `gᵢ(x, a) = Σ_{x′} P(x′ | x, a) xᵢ′`, which reduces to the local
    /// survival probability because transitions are independent per node.
    pub fn g_value(&self, i: usize, x_scope: &[bool], a_i: bool) -> Result<f64, ModelError> {
        self.local_transition(i, x_scope, a_i)
    }

    /// Survival probability from a scope assignment code.
    #[inline]
    pub fn g_code(&self, i: usize, scope_code: usize, a_i: bool) -> f64 {
        self.cpts[i].survival(scope_code, self.self_pos[i], a_i)
    }

    /// Survival probability of node `i` read directly from a full state.
    #[inline]
    pub fn g_state(&self, i: usize, x: &SystemState, a_i: bool) -> f64 {
        self.g_code(i, scope_code(self.scope(i), x), a_i)
    }

    /// `Σᵢ rᵢ(x)`: the reward of the working nodes, without action costs.
    pub fn state_reward(&self, x: &SystemState) -> f64 {
        self.rewards.iter().map(|r| r.eval(x)).sum()
    }

    /// `R(x, a) = Σᵢ rᵢ(x) − Σᵢ cᵢ(aᵢ)`.
    pub fn reward(&self, x: &SystemState, a: &ActionVector) -> Result<f64, ModelError> {
        self.check_len(x.len())?;
        self.check_len(a.len())?;
        Ok(self.reward_unchecked(x, a))
    }

    #[inline]
    pub(crate) fn reward_unchecked(&self, x: &SystemState, a: &ActionVector) -> f64 {
        let cost: f64 = self.costs.iter().map(|c| c.cost(a.get(c.node))).sum();
        self.state_reward(x) - cost
    }

    /// Largest possible `Σᵢ rᵢ(x)`.
    pub fn max_state_reward(&self) -> f64 {
        self.rewards.iter().map(RewardFactor::max_value).sum()
    }

    /// Upper bound on `|R(x, a)|` over all states and actions.
    pub fn max_abs_reward(&self) -> f64 {
        let hi = self.max_state_reward() - self.costs.iter().map(|c| c.c0).sum::<f64>();
        let lo = self.rewards.iter().map(RewardFactor::min_value).sum::<f64>()
            - self.costs.iter().map(|c| c.c1).sum::<f64>();
        hi.abs().max(lo.abs())
    }

    /// `∏ᵢ P(xᵢ′ | x_scope(i), aᵢ)`, guarded to `n ≤ 20`.
    pub fn joint_transition(&self, x: &SystemState, a: &ActionVector, x_next: &SystemState) -> Result<f64, ModelError> {
        self.joint_transition_guarded(x, a, x_next, JOINT_TRANSITION_GUARD)
    }

    pub fn joint_transition_guarded(
        &self,
        x: &SystemState,
        a: &ActionVector,
        x_next: &SystemState,
        guard: usize,
    ) -> Result<f64, ModelError> {
        if self.n() > guard {
            return Err(ModelError::TooLarge { what: "joint transition", n: self.n(), limit: guard });
        }
        self.check_len(x.len())?;
        self.check_len(a.len())?;
        self.check_len(x_next.len())?;
        Ok((0..self.n())
            .map(|i| {
                let p = self.g_state(i, x, a.get(i));
                if x_next.get(i) {
                    p
                } else {
                    1.0 - p
                }
            })
            .product())
    }

    /// Checks the three structural assumptions behind the distributed policy
    /// and the threshold classification.
    ///
    /// Transitions and rewards are factored by construction here, so the
    /// first two always hold; the third is verified numerically on every
    /// table.
    pub fn assumption_check(&self) -> AssumptionReport {
        let mut report = AssumptionReport { a1: true, a2: true, a3: true, violations: Vec::new() };
        for i in 0..self.n() {
            let v = self.structural_violations(i);
            report.a3 &= v.is_empty();
            report.violations.extend(v);
        }
        report
    }

    /// Violations of effective repair, no spontaneous recovery and strict
    /// cascading at node `i`.
    pub fn structural_violations(&self, i: usize) -> Vec<String> {
        let scope_len = self.scope(i).len();
        let pos = self.self_pos[i];
        let full = (1usize << scope_len) - 1;
        let mut repair_ok = true;
        let mut dead_ok = true;
        let mut strict_ok = true;
        let healthy = self.g_code(i, full, false);
        for code in 0..=full {
            if (self.g_code(i, code, true) - 1.0).abs() > STRUCTURE_TOL {
                repair_ok = false;
            }
            if bit(code, pos) {
                if code != full && !(self.g_code(i, code, false) < healthy) {
                    strict_ok = false;
                }
            } else if self.g_code(i, code, false).abs() > STRUCTURE_TOL {
                dead_ok = false;
            }
        }
        let mut out = Vec::new();
        if !repair_ok {
            out.push(format!("repair not deterministic at node {i}"));
        }
        if !dead_ok {
            out.push(format!("failed node recovers without repair at node {i}"));
        }
        if !strict_ok {
            out.push(format!("cascading strictness violated at node {i}"));
        }
        out
    }

    /// `Q(x, a) = R(x, a) + γ Σᵢ wᵢ gᵢ(x, aᵢ)` for the linear value `Σ wᵢ xᵢ`.
    pub fn q_value(&self, weights: &[f64], x: &SystemState, a: &ActionVector) -> f64 {
        let future: f64 = (0..self.n()).map(|i| weights[i] * self.g_state(i, x, a.get(i))).sum();
        self.reward_unchecked(x, a) + self.gamma * future
    }
}

/// All `2ⁿ` states in code order (node 0 = least significant bit).
pub fn all_states(n: usize) -> impl Iterator<Item = SystemState> {
    (0..1usize << n).map(move |c| SystemState::from_code(c, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Edge, Layer, Node};
    use alloc::string::ToString;

    fn net(n: usize, edges: &[(usize, usize)]) -> Network {
        let nodes =
            (0..n).map(|id| Node { id, name: id.to_string(), layer: Layer::Generic, base_reward: 0.0 }).collect();
        Network::new(nodes, edges.iter().map(|&(s, d)| Edge::new(s, d)).collect()).unwrap()
    }

    fn parametric(network: Network, p0: f64, pc: f64, rewards: &[f64]) -> FactoredModel {
        let n = network.len();
        FactoredModel::parametric(
            network,
            p0,
            pc,
            (0..n).map(|i| RewardFactor::gated(i, rewards[i])).collect(),
            (0..n).map(|i| CostFunction { node: i, c0: 0.0, c1: 1.0 }).collect(),
            0.9,
            vec![true; n],
        )
        .unwrap()
    }

    #[test]
    fn parametric_local_transition() {
        // node 2 with parents 0 and 1
        let m = parametric(net(3, &[(0, 2), (1, 2)]), 0.01, 0.3, &[1.0, 1.0, 1.0]);
        assert_eq!(m.local_transition(2, &[false, true, false], true).unwrap(), 1.0);
        assert_eq!(m.local_transition(2, &[true, true, false], false).unwrap(), 0.0);
        let p = m.local_transition(2, &[false, true, true], false).unwrap();
        assert!((p - 0.693).abs() < 1e-15, "{p}");
        assert!(matches!(
            m.local_transition(2, &[true, true], false),
            Err(ModelError::Scope { node: 2, expected: 3, got: 2 })
        ));
    }

    #[test]
    fn survival_strictly_decreases_with_failed_parents() {
        let m = parametric(net(4, &[(0, 3), (1, 3), (2, 3)]), 0.01, 0.3, &[1.0; 4]);
        let probs: Vec<f64> = (0..4)
            .map(|failed| {
                let xs: Vec<bool> = (0..3).map(|k| k >= failed).chain([true]).collect();
                m.local_transition(3, &xs, false).unwrap()
            })
            .collect();
        assert!(probs.windows(2).all(|w| w[0] > w[1]), "{probs:?}");
    }

    #[test]
    fn reward_examples() {
        let m = parametric(net(3, &[]), 0.0, 0.0, &[5.0, 3.0, 2.0]);
        let x: SystemState = "101".parse().unwrap();
        let a: ActionVector = "010".parse().unwrap();
        assert_eq!(m.reward(&x, &a).unwrap(), 6.0);
        assert_eq!(m.reward(&SystemState::all(3, false), &ActionVector::all(3, false)).unwrap(), 0.0);
        assert!(matches!(
            m.reward(&SystemState::all(2, false), &ActionVector::all(3, false)),
            Err(ModelError::Dimension { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn joint_transition_examples() {
        let m = parametric(net(1, &[]), 0.0, 0.3, &[1.0]);
        let one = SystemState::all(1, true);
        assert_eq!(m.joint_transition(&one, &ActionVector::all(1, false), &one).unwrap(), 1.0);

        let m = parametric(net(3, &[(0, 1), (1, 2)]), 0.05, 0.3, &[1.0; 3]);
        for x in all_states(3) {
            let p = m.joint_transition(&x, &ActionVector::all(3, true), &SystemState::all(3, true)).unwrap();
            assert_eq!(p, 1.0);
        }
    }

    #[test]
    fn joint_transition_guard() {
        let m = parametric(net(3, &[]), 0.05, 0.3, &[1.0; 3]);
        let x = SystemState::all(3, true);
        let a = ActionVector::all(3, false);
        assert!(matches!(m.joint_transition_guarded(&x, &a, &x, 2), Err(ModelError::TooLarge { n: 3, limit: 2, .. })));
    }

    fn explicit_model(table: Vec<f64>) -> FactoredModel {
        let network = net(2, &[(0, 1)]);
        let cpts = vec![
            LocalCpt { node: 0, scope: vec![0], kind: CptKind::Parametric { p0: 0.01, pc: 0.3 } },
            LocalCpt { node: 1, scope: vec![0, 1], kind: CptKind::Explicit(table) },
        ];
        FactoredModel::new(
            network,
            cpts,
            vec![RewardFactor::gated(0, 1.0), RewardFactor::gated(1, 1.0)],
            vec![CostFunction { node: 0, c0: 0.0, c1: 1.0 }, CostFunction { node: 1, c0: 0.0, c1: 1.0 }],
            0.9,
            vec![true, true],
        )
        .unwrap()
    }

    #[test]
    fn assumption_check_examples() {
        let m = parametric(net(3, &[(0, 1), (1, 2)]), 0.01, 0.3, &[1.0; 3]);
        assert!(m.assumption_check().all_hold());

        // index = code(x0, x1) + 4 a; x1 is bit 1
        let good = vec![0.0, 0.0, 0.5, 0.9, 1.0, 1.0, 1.0, 1.0];
        assert!(explicit_model(good).assumption_check().all_hold());

        let leaky_repair = vec![0.0, 0.0, 0.5, 0.9, 0.95, 0.95, 0.95, 0.95];
        let r = explicit_model(leaky_repair).assumption_check();
        assert!(!r.a3);
        assert!(r.violations.iter().any(|v| v == "repair not deterministic at node 1"), "{r:?}");

        let flat = vec![0.0, 0.0, 0.9, 0.9, 1.0, 1.0, 1.0, 1.0];
        let r = explicit_model(flat).assumption_check();
        assert!(!r.a3);
        assert!(r.violations.iter().any(|v| v.contains("strictness")));

        let resurrect = vec![0.2, 0.0, 0.5, 0.9, 1.0, 1.0, 1.0, 1.0];
        assert!(!explicit_model(resurrect).assumption_check().a3);
    }

    #[test]
    fn pc_zero_breaks_strictness_only_with_parents() {
        let m = parametric(net(2, &[(0, 1)]), 0.01, 0.0, &[1.0; 2]);
        let r = m.assumption_check();
        assert!(!r.a3);
        assert_eq!(r.violations, vec!["cascading strictness violated at node 1".to_string()]);
    }

    #[test]
    fn model_rejects_bad_inputs() {
        let network = net(1, &[]);
        let bad_gamma = FactoredModel::parametric(
            network.clone(),
            0.01,
            0.3,
            vec![RewardFactor::gated(0, 1.0)],
            vec![CostFunction { node: 0, c0: 0.0, c1: 1.0 }],
            1.0,
            vec![true],
        );
        assert!(matches!(bad_gamma, Err(ModelError::Invalid(_))));
        let cheap_action = FactoredModel::parametric(
            network,
            0.01,
            0.3,
            vec![RewardFactor::gated(0, 1.0)],
            vec![CostFunction { node: 0, c0: 1.0, c1: 0.5 }],
            0.9,
            vec![true],
        );
        assert!(matches!(cheap_action, Err(ModelError::Invalid(_))));
    }

    #[test]
    fn state_code_round_trip() {
        let x: SystemState = "0110".parse().unwrap();
        assert_eq!(x.code(), 0b0110);
        assert_eq!(SystemState::from_code(6, 4), x);
        assert_eq!(x.to_string(), "0110");
        assert!("01a".parse::<SystemState>().is_err());
    }
}
