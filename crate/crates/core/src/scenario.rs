//! A validated planning scenario: network plus the MDP parameters needed to
//! build a [`FactoredModel`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::fmdp::{CostFunction, CptKind, FactoredModel, LocalCpt, ModelError, RewardFactor};
use crate::network::Network;

/// State-relevance weights of the approximate LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlphaSpec {
    /// Uniform over all `2ⁿ` states, so `E[xᵢ] = ½`.
    #[default]
    Uniform,
    /// Point mass at the all-working state.
    AllOnes,
}

impl AlphaSpec {
    /// `E_α[xᵢ]`.
    pub fn mean_state(self, _i: usize) -> f64 {
        match self {
            AlphaSpec::Uniform => 0.5,
            AlphaSpec::AllOnes => 1.0,
        }
    }

    /// `α(x)` for a state given by its code among `2ⁿ` states.
    pub fn weight(self, code: usize, n: usize) -> f64 {
        match self {
            AlphaSpec::Uniform => 1.0 / (1u64 << n) as f64,
            AlphaSpec::AllOnes => {
                if code == (1usize << n) - 1 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AlphaSpec::Uniform => "uniform",
            AlphaSpec::AllOnes => "all_ones",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("{field} out of range: {message}")]
    Range { field: String, message: String },
    #[error("unknown node id {id} in {field}")]
    UnknownNode { field: String, id: usize },
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: Network,
    pub gamma: f64,
    /// Prior failure probability of a working node with all parents working.
    pub p0: f64,
    /// Extra failure factor per failed parent.
    pub pc: f64,
    /// `(c(0), c(1))` per node.
    pub costs: Vec<(f64, f64)>,
    /// Explicit reward tables by node; nodes without one earn `base_reward`
    /// whenever they work.
    pub reward_factors: BTreeMap<usize, RewardFactor>,
    /// Explicit transition tables by node; the rest use `(p0, pc)`.
    pub explicit_cpts: BTreeMap<usize, Vec<f64>>,
    pub alpha: AlphaSpec,
    pub controllable: Vec<bool>,
}

fn range(field: &str, message: String) -> ScenarioError {
    ScenarioError::Range { field: field.into(), message }
}

impl Scenario {
    /// Scenario with default parameters: γ = 0.9, p0 = 0.01, pc = 0.3,
    /// costs (0, 1), uniform α and every node controllable.
    pub fn with_defaults(network: Network) -> Self {
        let n = network.len();
        Scenario {
            network,
            gamma: 0.9,
            p0: 0.01,
            pc: 0.3,
            costs: vec![(0.0, 1.0); n],
            reward_factors: BTreeMap::new(),
            explicit_cpts: BTreeMap::new(),
            alpha: AlphaSpec::Uniform,
            controllable: vec![true; n],
        }
    }

    pub fn n(&self) -> usize {
        self.network.len()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let n = self.n();
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(range("gamma", format!("must lie in (0, 1), got {}", self.gamma)));
        }
        for (field, v) in [("p0", self.p0), ("pc", self.pc)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(range(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        if self.costs.len() != n {
            return Err(range("costs", format!("need {n} entries, got {}", self.costs.len())));
        }
        for (i, &(c0, c1)) in self.costs.iter().enumerate() {
            if !(c0 >= 0.0 && c1 >= c0 && c1.is_finite()) {
                return Err(range("costs", format!("node {i}: need c1 >= c0 >= 0, got ({c0}, {c1})")));
            }
        }
        if self.controllable.len() != n {
            return Err(range("controllable", format!("need {n} flags, got {}", self.controllable.len())));
        }
        if let Some(&id) = self.reward_factors.keys().find(|&&id| id >= n) {
            return Err(ScenarioError::UnknownNode { field: "reward_factors".into(), id });
        }
        if let Some(&id) = self.explicit_cpts.keys().find(|&&id| id >= n) {
            return Err(ScenarioError::UnknownNode { field: "cpts".into(), id });
        }
        self.model().map(|_| ())
    }

    /// Builds the factored model described by this scenario.
    pub fn model(&self) -> Result<FactoredModel, ScenarioError> {
        let n = self.n();
        let mut cpts = Vec::with_capacity(n);
        let mut rewards = Vec::with_capacity(n);
        for i in 0..n {
            let scope = self.network.neighborhood(i)?.to_vec();
            let kind = match self.explicit_cpts.get(&i) {
                Some(table) => CptKind::Explicit(table.clone()),
                None => CptKind::Parametric { p0: self.p0, pc: self.pc },
            };
            cpts.push(LocalCpt { node: i, scope, kind });
            rewards.push(match self.reward_factors.get(&i) {
                Some(r) => r.clone(),
                None => RewardFactor::gated(i, self.network.nodes()[i].base_reward),
            });
        }
        let costs = self.costs.iter().enumerate().map(|(i, &(c0, c1))| CostFunction { node: i, c0, c1 }).collect();
        Ok(FactoredModel::new(self.network.clone(), cpts, rewards, costs, self.gamma, self.controllable.clone())?)
    }
}
