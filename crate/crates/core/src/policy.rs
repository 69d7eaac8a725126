//! Action selection.
//!
//! With the indicator basis and per-node dynamics, the greedy objective
//! `R(x, a) + γ Σᵢ wᵢ gᵢ(x, aᵢ)` splits into one independent term per node,
//! so each node can pick its own action from its scope alone
//! ([`distributed_action`]). [`centralized_action`] enumerates every joint
//! action and serves as the oracle for that decomposition.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_chacha::rand_core::Rng;

use crate::bits::{bit, unit_f64};
use crate::factored_lp::Weights;
use crate::fmdp::{ActionVector, FactoredModel, ModelError, SystemState};

/// Most controllable nodes [`centralized_action`] will enumerate.
pub const CENTRALIZED_GUARD: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("centralized search over {controllable} controllable nodes exceeds the limit of {limit}; use the distributed policy")]
    TooLarge { controllable: usize, limit: usize },
    #[error("{0} policy needs basis weights")]
    MissingWeights(String),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("threshold classification refused: {0}")]
    Assumption(String),
    #[error("unknown policy {0:?}")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyKind {
    /// Per-node greedy policy from the basis weights.
    OptimalDistributed,
    /// Exhaustive greedy search over joint actions.
    OptimalCentralized,
    /// Repair every failed node, leave working nodes alone.
    RepairFaulty,
    /// Repair failed nodes with `p_repair`, maintain working ones with `p_maintain`.
    Randomized {
        p_repair: f64,
        p_maintain: f64,
    },
    NoAction,
    /// Distributed greedy policy limited to `budget` actions per step.
    Budgeted(usize),
}

impl PolicyKind {
    pub const RANDOMIZED_DEFAULT: PolicyKind = PolicyKind::Randomized { p_repair: 0.8, p_maintain: 0.2 };

    pub fn needs_weights(&self) -> bool {
        matches!(self, PolicyKind::OptimalDistributed | PolicyKind::OptimalCentralized | PolicyKind::Budgeted(_))
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::OptimalDistributed => f.write_str("optimal"),
            PolicyKind::OptimalCentralized => f.write_str("optimal-centralized"),
            PolicyKind::RepairFaulty => f.write_str("repair-faulty"),
            PolicyKind::Randomized { p_repair, p_maintain } => {
                if (*p_repair, *p_maintain) == (0.8, 0.2) {
                    f.write_str("randomized")
                } else {
                    write!(f, "randomized:{p_repair}:{p_maintain}")
                }
            }
            PolicyKind::NoAction => f.write_str("no-action"),
            PolicyKind::Budgeted(b) => write!(f, "budgeted:{b}"),
        }
    }
}

/// Accepts `optimal`, `optimal-centralized`, `repair-faulty`, `randomized`
/// (optionally `randomized:<p_repair>:<p_maintain>`), `no-action` and
/// `budgeted:<B>`.
impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || PolicyError::Unknown(s.into());
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let kind = match (head, rest.as_slice()) {
            ("optimal" | "optimal-distributed", []) => PolicyKind::OptimalDistributed,
            ("optimal-centralized", []) => PolicyKind::OptimalCentralized,
            ("repair-faulty", []) => PolicyKind::RepairFaulty,
            ("randomized", []) => PolicyKind::RANDOMIZED_DEFAULT,
            ("randomized", [r, m]) => {
                let p_repair: f64 = r.parse().map_err(|_| unknown())?;
                let p_maintain: f64 = m.parse().map_err(|_| unknown())?;
                if !(0.0..=1.0).contains(&p_repair) || !(0.0..=1.0).contains(&p_maintain) {
                    return Err(unknown());
                }
                PolicyKind::Randomized { p_repair, p_maintain }
            }
            ("no-action", []) => PolicyKind::NoAction,
            ("budgeted", [b]) => PolicyKind::Budgeted(b.parse().map_err(|_| unknown())?),
            _ => return Err(unknown()),
        };
        Ok(kind)
    }
}

/// A policy kind bound to the weights it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub kind: PolicyKind,
    pub weights: Option<Weights>,
}

impl Policy {
    pub fn new(kind: PolicyKind, weights: Option<Weights>) -> Result<Self, PolicyError> {
        if kind.needs_weights() && weights.is_none() {
            return Err(PolicyError::MissingWeights(format!("{kind}")));
        }
        Ok(Policy { kind, weights })
    }

    pub fn baseline(kind: PolicyKind) -> Self {
        Policy { kind, weights: None }
    }

    fn weights(&self) -> Result<&Weights, PolicyError> {
        self.weights.as_ref().ok_or_else(|| PolicyError::MissingWeights(format!("{}", self.kind)))
    }

    pub fn act<R: Rng + ?Sized>(
        &self,
        model: &FactoredModel,
        x: &SystemState,
        rng: &mut R,
    ) -> Result<ActionVector, PolicyError> {
        match self.kind {
            PolicyKind::OptimalDistributed => distributed_action(model, self.weights()?, x),
            PolicyKind::OptimalCentralized => centralized_action(model, self.weights()?, x),
            PolicyKind::Budgeted(b) => budgeted_action(model, self.weights()?, x, b),
            kind => baseline_action(kind, model, x, rng),
        }
    }
}

fn check(model: &FactoredModel, w: &Weights, x: &SystemState) -> Result<(), PolicyError> {
    if w.len() != model.n() {
        return Err(PolicyError::WeightCount { expected: model.n(), got: w.len() });
    }
    if x.len() != model.n() {
        return Err(ModelError::Dimension { expected: model.n(), got: x.len() }.into());
    }
    Ok(())
}

/// `(idle, act)` local objective values `γ wᵢ gᵢ(x, aᵢ) − cᵢ(aᵢ)`.
#[inline]
fn local_values(model: &FactoredModel, w: &Weights, x: &SystemState, i: usize) -> (f64, f64) {
    let gw = model.gamma() * w.get(i);
    let c = model.cost(i);
    (gw * model.g_state(i, x, false) - c.c0, gw * model.g_state(i, x, true) - c.c1)
}

/// Per-node argmax of `γ wᵢ gᵢ(x_scope, aᵢ) − cᵢ(aᵢ)`; ties keep `aᵢ = 0`.
pub fn distributed_action(model: &FactoredModel, w: &Weights, x: &SystemState) -> Result<ActionVector, PolicyError> {
    check(model, w, x)?;
    let mut a = ActionVector::all(model.n(), false);
    for i in 0..model.n() {
        if model.is_controllable(i) {
            let (idle, act) = local_values(model, w, x, i);
            a.set(i, act > idle);
        }
    }
    Ok(a)
}

/// Exhaustive argmax of `Q(x, a)` over joint actions on the controllable
/// nodes; ties go to the lexicographically smallest action vector.
pub fn centralized_action(model: &FactoredModel, w: &Weights, x: &SystemState) -> Result<ActionVector, PolicyError> {
    check(model, w, x)?;
    let ids = model.controllable_ids();
    if ids.len() > CENTRALIZED_GUARD {
        return Err(PolicyError::TooLarge { controllable: ids.len(), limit: CENTRALIZED_GUARD });
    }
    let k = ids.len();
    let mut best = ActionVector::all(model.n(), false);
    let mut best_q = f64::NEG_INFINITY;
    let mut a = best.clone();
    // ids[0] is the most significant bit so codes ascend lexicographically
    for code in 0..1usize << k {
        for (j, &i) in ids.iter().enumerate() {
            a.set(i, bit(code, k - 1 - j));
        }
        let q = model.q_value(w.as_slice(), x, &a);
        if q > best_q {
            best_q = q;
            best.clone_from(&a);
        }
    }
    Ok(best)
}

/// Distributed greedy policy with at most `budget` active nodes: the nodes
/// with the largest positive gain act, ties going to the lower id.
pub fn budgeted_action(
    model: &FactoredModel,
    w: &Weights,
    x: &SystemState,
    budget: usize,
) -> Result<ActionVector, PolicyError> {
    check(model, w, x)?;
    let mut gains: Vec<(f64, usize)> = (0..model.n())
        .filter(|&i| model.is_controllable(i))
        .filter_map(|i| {
            let (idle, act) = local_values(model, w, x, i);
            let gain = act - idle;
            (gain > 0.0).then_some((gain, i))
        })
        .collect();
    gains.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut a = ActionVector::all(model.n(), false);
    for &(_, i) in gains.iter().take(budget) {
        a.set(i, true);
    }
    Ok(a)
}

/// Weight-free baseline policies. Randomized draws one uniform per
/// controllable node.
pub fn baseline_action<R: Rng + ?Sized>(
    kind: PolicyKind,
    model: &FactoredModel,
    x: &SystemState,
    rng: &mut R,
) -> Result<ActionVector, PolicyError> {
    if x.len() != model.n() {
        return Err(ModelError::Dimension { expected: model.n(), got: x.len() }.into());
    }
    let n = model.n();
    let mut a = ActionVector::all(n, false);
    match kind {
        PolicyKind::RepairFaulty => {
            for i in (0..n).filter(|&i| model.is_controllable(i)) {
                a.set(i, !x.get(i));
            }
        }
        PolicyKind::Randomized { p_repair, p_maintain } => {
            for i in (0..n).filter(|&i| model.is_controllable(i)) {
                let p = if x.get(i) { p_maintain } else { p_repair };
                a.set(i, unit_f64(rng) < p);
            }
        }
        PolicyKind::NoAction => {}
        other => return Err(PolicyError::MissingWeights(format!("{other}"))),
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Regime {
    NeverRepair,
    RepairWhenFaultyOnly,
    AlsoMaintainWhenNeighborsDegraded,
    AlwaysMaintain,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::NeverRepair => "never_repair",
            Regime::RepairWhenFaultyOnly => "repair_when_faulty_only",
            Regime::AlsoMaintainWhenNeighborsDegraded => "also_maintain_when_neighbors_degraded",
            Regime::AlwaysMaintain => "always_maintain",
        }
    }
}

/// Maintenance threshold for one degraded parent pattern of a working node.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternThreshold {
    /// Scope assignment code (own bit set, at least one parent failed).
    pub scope_code: usize,
    /// `P(Xᵢ′ = 1 | pattern, aᵢ = 0)`.
    pub survival: f64,
    /// `γ wᵢ (1 − survival)`.
    pub threshold: f64,
}

/// Threshold structure of node `i`'s repair decision.
///
/// All thresholds carry the discount factor `γ`, because that is the
/// comparison the distributed policy performs: a failed node is repaired
/// iff `c(1) − c(0) < γwᵢ`, and a working node is maintained iff
/// `c(1) − c(0) < γwᵢ (1 − P)` for its current survival probability `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub node: usize,
    pub controllable: bool,
    pub regime: Regime,
    /// `γ wᵢ`.
    pub faulty_threshold: f64,
    /// `γ wᵢ (1 − P_{all parents working})`.
    pub healthy_threshold: f64,
    /// `γ wᵢ (1 − min P_{degraded})`, absent when the node has no parents.
    pub degraded_threshold: Option<f64>,
    pub cost_gap: f64,
    pub patterns: Vec<PatternThreshold>,
}

impl ThresholdReport {
    /// The action the regime prescribes for a scope assignment of the node.
    pub fn predicts_action(&self, model: &FactoredModel, scope_code: usize) -> bool {
        if !self.controllable {
            return false;
        }
        let pos = model.self_position(self.node);
        let full = (1usize << model.scope(self.node).len()) - 1;
        if !bit(scope_code, pos) {
            return self.regime != Regime::NeverRepair;
        }
        if scope_code == full {
            return self.regime == Regime::AlwaysMaintain;
        }
        match self.regime {
            Regime::NeverRepair | Regime::RepairWhenFaultyOnly => false,
            Regime::AlwaysMaintain => true,
            Regime::AlsoMaintainWhenNeighborsDegraded => {
                self.patterns.iter().find(|p| p.scope_code == scope_code).is_some_and(|p| self.cost_gap < p.threshold)
            }
        }
    }

    /// Degraded patterns under which a working node is maintained.
    pub fn maintained_patterns(&self) -> impl Iterator<Item = &PatternThreshold> {
        self.patterns.iter().filter(move |p| self.cost_gap < p.threshold)
    }
}

/// Classifies node `i` by comparing its cost gap with the thresholds.
pub fn threshold_classify(model: &FactoredModel, w: &Weights, i: usize) -> Result<ThresholdReport, PolicyError> {
    if i >= model.n() {
        return Err(ModelError::Index { index: i, n: model.n() }.into());
    }
    if w.len() != model.n() {
        return Err(PolicyError::WeightCount { expected: model.n(), got: w.len() });
    }
    let violations = model.structural_violations(i);
    if !violations.is_empty() {
        return Err(PolicyError::Assumption(violations.join("; ")));
    }
    let gw = model.gamma() * w.get(i);
    let pos = model.self_position(i);
    let full = (1usize << model.scope(i).len()) - 1;
    let healthy = model.g_code(i, full, false);
    let patterns: Vec<PatternThreshold> = (0..full)
        .filter(|&code| bit(code, pos))
        .map(|code| {
            let survival = model.g_code(i, code, false);
            PatternThreshold { scope_code: code, survival, threshold: gw * (1.0 - survival) }
        })
        .collect();
    let faulty_threshold = gw;
    let healthy_threshold = gw * (1.0 - healthy);
    let degraded_threshold = patterns.iter().map(|p| p.threshold).reduce(f64::max);
    let gap = model.cost(i).gap();
    let regime = if gap >= faulty_threshold {
        Regime::NeverRepair
    } else if gap >= degraded_threshold.unwrap_or(healthy_threshold) {
        Regime::RepairWhenFaultyOnly
    } else if gap >= healthy_threshold {
        Regime::AlsoMaintainWhenNeighborsDegraded
    } else {
        Regime::AlwaysMaintain
    };
    Ok(ThresholdReport {
        node: i,
        controllable: model.is_controllable(i),
        regime,
        faulty_threshold,
        healthy_threshold,
        degraded_threshold,
        cost_gap: gap,
        patterns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmdp::{CostFunction, RewardFactor};
    use crate::network::{Edge, Layer, Network, Node};
    use alloc::string::ToString;
    use alloc::vec;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(n: usize, edges: &[(usize, usize)], gaps: &[f64]) -> FactoredModel {
        let nodes =
            (0..n).map(|id| Node { id, name: id.to_string(), layer: Layer::Generic, base_reward: 1.0 }).collect();
        let network = Network::new(nodes, edges.iter().map(|&(s, d)| Edge::new(s, d)).collect()).unwrap();
        FactoredModel::parametric(
            network,
            0.01,
            0.3,
            (0..n).map(|i| RewardFactor::gated(i, 1.0)).collect(),
            (0..n).map(|i| CostFunction { node: i, c0: 0.0, c1: gaps[i] }).collect(),
            0.9,
            vec![true; n],
        )
        .unwrap()
    }

    #[test]
    fn distributed_examples() {
        let faulty = SystemState::all(1, false);
        let m = model(1, &[], &[1.0]);
        assert!(distributed_action(&m, &Weights(vec![10.0]), &faulty).unwrap().get(0));
        let m = model(1, &[], &[12.0]);
        assert!(!distributed_action(&m, &Weights(vec![10.0]), &faulty).unwrap().get(0));
        // exact tie: γw = 9 = gap
        let m = model(1, &[], &[9.0]);
        assert!(!distributed_action(&m, &Weights(vec![10.0]), &faulty).unwrap().get(0));
    }

    #[test]
    fn uncontrollable_nodes_stay_idle() {
        let m = model(2, &[], &[1.0, 1.0]).with_controllable(vec![false, true]).unwrap();
        let w = Weights(vec![10.0, 10.0]);
        let x = SystemState::all(2, false);
        let a = distributed_action(&m, &w, &x).unwrap();
        assert_eq!(a.to_string(), "01");
        assert_eq!(centralized_action(&m, &w, &x).unwrap(), a);
        let none = m.with_controllable(vec![false, false]).unwrap();
        assert_eq!(centralized_action(&none, &w, &x).unwrap().to_string(), "00");
    }

    #[test]
    fn centralized_on_independent_nodes_matches_per_node_argmax() {
        let m = model(2, &[], &[1.0, 20.0]);
        let w = Weights(vec![10.0, 10.0]);
        for x in crate::fmdp::all_states(2) {
            let mut best = None;
            let mut best_q = f64::NEG_INFINITY;
            for code in 0..4 {
                let a = ActionVector::from_code(code, 2);
                let q = m.q_value(w.as_slice(), &x, &a);
                if q > best_q {
                    best_q = q;
                    best = Some(a);
                }
            }
            let got = centralized_action(&m, &w, &x).unwrap();
            assert_eq!(m.q_value(w.as_slice(), &x, &got), best_q);
            assert_eq!(got, best.unwrap());
        }
    }

    #[test]
    fn centralized_guard() {
        let n = CENTRALIZED_GUARD + 1;
        let m = model(n, &[], &vec![1.0; n]);
        let err = centralized_action(&m, &Weights(vec![1.0; n]), &SystemState::all(n, true)).unwrap_err();
        assert!(matches!(err, PolicyError::TooLarge { controllable: 21, limit: 20 }));
    }

    #[test]
    fn budget_examples() {
        let m = model(3, &[], &[1.0, 1.0, 1.0]);
        let x = SystemState::all(3, false);
        let w = Weights(vec![10.0, 10.0 * 4.0 / 9.0, 0.5]);
        assert_eq!(budgeted_action(&m, &w, &x, 0).unwrap().to_string(), "000");
        assert_eq!(budgeted_action(&m, &w, &x, 1).unwrap().to_string(), "100");
        assert_eq!(budgeted_action(&m, &w, &x, 3).unwrap(), distributed_action(&m, &w, &x).unwrap());
        // equal gains go to the lower id
        let w = Weights(vec![10.0, 10.0, 10.0]);
        assert_eq!(budgeted_action(&m, &w, &x, 2).unwrap().to_string(), "110");
    }

    #[test]
    fn baselines() {
        let m = model(3, &[], &[1.0; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: SystemState = "101".parse().unwrap();
        assert_eq!(baseline_action(PolicyKind::RepairFaulty, &m, &x, &mut rng).unwrap().to_string(), "010");
        assert_eq!(baseline_action(PolicyKind::NoAction, &m, &x, &mut rng).unwrap().to_string(), "000");
    }

    #[test]
    fn randomized_repair_frequency() {
        let m = model(1, &[], &[1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = SystemState::all(1, false);
        let draws = 10_000;
        let repairs = (0..draws)
            .filter(|_| baseline_action(PolicyKind::RANDOMIZED_DEFAULT, &m, &x, &mut rng).unwrap().get(0))
            .count();
        let freq = repairs as f64 / draws as f64;
        assert!((freq - 0.8).abs() <= 0.02, "{freq}");
    }

    #[test]
    fn threshold_examples() {
        // isolated node: P_all = 0.99, thresholds 9 and 0.09
        let m = model(1, &[], &[1.0]);
        let r = threshold_classify(&m, &Weights(vec![10.0]), 0).unwrap();
        assert_eq!(r.regime, Regime::RepairWhenFaultyOnly);
        assert!((r.healthy_threshold - 0.09).abs() < 1e-12);
        assert_eq!(r.degraded_threshold, None);
        let m = model(1, &[], &[0.05]);
        assert_eq!(threshold_classify(&m, &Weights(vec![10.0]), 0).unwrap().regime, Regime::AlwaysMaintain);
        let m = model(1, &[], &[10.0]);
        assert_eq!(threshold_classify(&m, &Weights(vec![10.0]), 0).unwrap().regime, Regime::NeverRepair);
        // parent failures push survival to 0.693: maintain iff gap < 9 * 0.307
        let m = model(2, &[(0, 1)], &[1.0, 1.0]);
        let r = threshold_classify(&m, &Weights(vec![10.0, 10.0]), 1).unwrap();
        assert_eq!(r.regime, Regime::AlsoMaintainWhenNeighborsDegraded);
        assert!((r.degraded_threshold.unwrap() - 9.0 * (1.0 - 0.693)).abs() < 1e-12);
        assert!(r.healthy_threshold <= r.degraded_threshold.unwrap());
        assert!(r.degraded_threshold.unwrap() <= r.faulty_threshold);
    }

    #[test]
    fn policy_kind_parsing() {
        for s in ["optimal", "optimal-centralized", "repair-faulty", "randomized", "no-action", "budgeted:3"] {
            let k: PolicyKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert_eq!(
            "randomized:0.5:0.1".parse::<PolicyKind>().unwrap(),
            PolicyKind::Randomized { p_repair: 0.5, p_maintain: 0.1 }
        );
        assert!("budgeted".parse::<PolicyKind>().is_err());
        assert!("randomized:2:0".parse::<PolicyKind>().is_err());
        assert!(Policy::new(PolicyKind::OptimalDistributed, None).is_err());
    }
}
