//! JSON scenario documents.
//!
//! ```json
//! {
//!   "nodes": [{"id": 0, "name": "a", "layer": "power", "base_reward": 5.0}],
//!   "edges": [[0, 1]],
//!   "gamma": 0.9, "p0": 0.01, "pc": 0.3,
//!   "costs": {"default": [0, 1], "3": [0, 2]},
//!   "alpha": "uniform",
//!   "controllable": "all",
//!   "reward_factors": [{"node": 1, "scope": [0, 1], "table": [0, 0, 0, 4]}],
//!   "cpts": [{"node": 0, "table": [0, 0.99, 1, 1]}]
//! }
//! ```
//!
//! Keys may appear in any order and node lists need not be sorted. Tables
//! are flat arrays in canonical scope order: scope members ascending, the
//! lowest id as the fastest-varying bit. Transition tables list the
//! `aᵢ = 0` half first.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use resplan_core::fmdp::RewardFactor;
use resplan_core::generate::demo_scenario;
use resplan_core::network::{Edge, Layer, Network, Node};
use resplan_core::scenario::{AlphaSpec, Scenario, ScenarioError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// The bundled 20-node power/subway case study.
pub const CASE_STUDY_JSON: &str = include_str!("../data/case_study_nyc.json");

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scenario parse error at `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("unknown builtin scenario {0:?}; available: case-study, demo[:<scale>[:<seed>]]")]
    UnknownBuiltin(String),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: usize,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub layer: LayerDoc,
    pub base_reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerDoc {
    Power,
    Subway,
    #[default]
    Generic,
}

impl From<LayerDoc> for Layer {
    fn from(l: LayerDoc) -> Self {
        match l {
            LayerDoc::Power => Layer::Power,
            LayerDoc::Subway => Layer::Subway,
            LayerDoc::Generic => Layer::Generic,
        }
    }
}

impl From<Layer> for LayerDoc {
    fn from(l: Layer) -> Self {
        match l {
            Layer::Power => LayerDoc::Power,
            Layer::Subway => LayerDoc::Subway,
            Layer::Generic => LayerDoc::Generic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaDoc {
    #[default]
    Uniform,
    AllOnes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControllableDoc {
    Keyword(AllKeyword),
    Ids(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllKeyword {
    All,
}

impl Default for ControllableDoc {
    fn default() -> Self {
        ControllableDoc::Keyword(AllKeyword::All)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardFactorDoc {
    pub node: usize,
    pub scope: Vec<usize>,
    pub table: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptDoc {
    pub node: usize,
    pub table: Vec<f64>,
}

fn default_gamma() -> f64 {
    0.9
}

fn default_p0() -> f64 {
    0.01
}

fn default_pc() -> f64 {
    0.3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub nodes: Vec<NodeDoc>,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_p0")]
    pub p0: f64,
    #[serde(default = "default_pc")]
    pub pc: f64,
    #[serde(default)]
    pub costs: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub alpha: AlphaDoc,
    #[serde(default)]
    pub controllable: ControllableDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reward_factors: Vec<RewardFactorDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cpts: Vec<CptDoc>,
}

fn range(field: String, message: String) -> ScenarioError {
    ScenarioError::Range { field, message }
}

impl ScenarioDoc {
    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let mut nodes: Vec<Node> = self
            .nodes
            .into_iter()
            .map(|d| Node { id: d.id, name: d.name, layer: d.layer.into(), base_reward: d.base_reward })
            .collect();
        nodes.sort_by_key(|n| n.id);
        let n = nodes.len();
        let edges = self.edges.iter().map(|&[s, d]| Edge::new(s, d)).collect();
        let network = Network::new(nodes, edges)?;
        let mut sc = Scenario::with_defaults(network);
        sc.gamma = self.gamma;
        sc.p0 = self.p0;
        sc.pc = self.pc;
        let default = self.costs.get("default").copied().unwrap_or([0.0, 1.0]);
        sc.costs = vec![(default[0], default[1]); n];
        for (key, &[c0, c1]) in &self.costs {
            if key == "default" {
                continue;
            }
            let id: usize = key
                .parse()
                .map_err(|_| range(format!("costs.{key}"), "keys must be node ids or \"default\"".into()))?;
            if id >= n {
                return Err(ScenarioError::UnknownNode { field: format!("costs.{key}"), id });
            }
            sc.costs[id] = (c0, c1);
        }
        sc.alpha = match self.alpha {
            AlphaDoc::Uniform => AlphaSpec::Uniform,
            AlphaDoc::AllOnes => AlphaSpec::AllOnes,
        };
        sc.controllable = match self.controllable {
            ControllableDoc::Keyword(AllKeyword::All) => vec![true; n],
            ControllableDoc::Ids(ids) => {
                let mut flags = vec![false; n];
                for id in ids {
                    if id >= n {
                        return Err(ScenarioError::UnknownNode { field: "controllable".into(), id });
                    }
                    flags[id] = true;
                }
                flags
            }
        };
        for (k, f) in self.reward_factors.into_iter().enumerate() {
            if f.node >= n {
                return Err(ScenarioError::UnknownNode { field: format!("reward_factors[{k}].node"), id: f.node });
            }
            if sc.reward_factors.insert(f.node, RewardFactor { node: f.node, scope: f.scope, table: f.table }).is_some()
            {
                return Err(range(format!("reward_factors[{k}]"), format!("second factor for node {}", f.node)));
            }
        }
        for (k, c) in self.cpts.into_iter().enumerate() {
            if c.node >= n {
                return Err(ScenarioError::UnknownNode { field: format!("cpts[{k}].node"), id: c.node });
            }
            if sc.explicit_cpts.insert(c.node, c.table).is_some() {
                return Err(range(format!("cpts[{k}]"), format!("second table for node {}", c.node)));
            }
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_scenario(sc: &Scenario, description: Option<String>) -> Self {
        let nodes = sc
            .network
            .nodes()
            .iter()
            .map(|n| NodeDoc { id: n.id, name: n.name.clone(), layer: n.layer.into(), base_reward: n.base_reward })
            .collect();
        let edges = sc.network.edges().iter().map(|e| [e.src, e.dst]).collect();
        let mut counts: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        for &(c0, c1) in &sc.costs {
            *counts.entry((c0.to_bits(), c1.to_bits())).or_default() += 1;
        }
        // most common pair becomes the default; ties go to the smallest bit pattern
        let default = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&(a, b), _)| (f64::from_bits(a), f64::from_bits(b)))
            .unwrap_or((0.0, 1.0));
        let mut costs = BTreeMap::new();
        costs.insert("default".to_string(), [default.0, default.1]);
        for (i, &c) in sc.costs.iter().enumerate() {
            if c != default {
                costs.insert(i.to_string(), [c.0, c.1]);
            }
        }
        let controllable = if sc.controllable.iter().all(|&c| c) {
            ControllableDoc::default()
        } else {
            ControllableDoc::Ids((0..sc.n()).filter(|&i| sc.controllable[i]).collect())
        };
        ScenarioDoc {
            description,
            nodes,
            edges,
            gamma: sc.gamma,
            p0: sc.p0,
            pc: sc.pc,
            costs,
            alpha: match sc.alpha {
                AlphaSpec::Uniform => AlphaDoc::Uniform,
                AlphaSpec::AllOnes => AlphaDoc::AllOnes,
            },
            controllable,
            reward_factors: sc
                .reward_factors
                .values()
                .map(|f| RewardFactorDoc { node: f.node, scope: f.scope.clone(), table: f.table.clone() })
                .collect(),
            cpts: sc.explicit_cpts.iter().map(|(&node, t)| CptDoc { node, table: t.clone() }).collect(),
        }
    }
}

/// Parses a scenario document; parse errors name the offending field.
pub fn parse_scenario(text: &str) -> Result<Scenario, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de)
        .map_err(|e| LoadError::Parse { field: e.path().to_string(), message: e.inner().to_string() })?;
    Ok(doc.into_scenario()?)
}

/// The bundled case study.
pub fn case_study() -> Scenario {
    parse_scenario(CASE_STUDY_JSON).expect("bundled case study is valid")
}

/// Loads `builtin:case-study`, `builtin:demo[:<scale>[:<seed>]]` or a file path.
pub fn load_scenario(source: &str) -> Result<Scenario, LoadError> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return builtin(name);
    }
    let text = fs::read_to_string(Path::new(source))
        .map_err(|source_err| LoadError::Io { path: source.to_string(), source: source_err })?;
    parse_scenario(&text)
}

fn builtin(name: &str) -> Result<Scenario, LoadError> {
    let mut parts = name.split(':');
    match parts.next() {
        Some("case-study") if parts.next().is_none() => Ok(case_study()),
        Some("demo") => {
            let unknown = || LoadError::UnknownBuiltin(name.to_string());
            let scale = parts.next().map(|s| s.parse().map_err(|_| unknown())).transpose()?.unwrap_or(100);
            let seed = parts.next().map(|s| s.parse().map_err(|_| unknown())).transpose()?.unwrap_or(0);
            if parts.next().is_some() {
                return Err(unknown());
            }
            Ok(demo_scenario(seed, scale)?)
        }
        _ => Err(LoadError::UnknownBuiltin(name.to_string())),
    }
}

/// Pretty JSON document for a scenario.
pub fn to_json(sc: &Scenario, description: Option<String>) -> String {
    let doc = ScenarioDoc::from_scenario(sc, description);
    let mut s = serde_json::to_string_pretty(&doc).expect("scenario documents serialize");
    s.push('\n');
    s
}

/// SHA-256 of the compact canonical document (no description).
pub fn scenario_hash(sc: &Scenario) -> String {
    let doc = ScenarioDoc::from_scenario(sc, None);
    let bytes = serde_json::to_vec(&doc).expect("scenario documents serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
