//! Aggregated dependency graph of an interdependent infrastructure system.
//!
//! A directed edge `(src, dst)` means the state of `src` influences the next
//! state of `dst`. The scope of node `i` is `i` together with all of its
//! parents, sorted ascending; every factor table in the crate is laid out in
//! this canonical order.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::fmdp::SystemState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Power,
    Subway,
    Generic,
}

impl Layer {
    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Power => "power",
            Layer::Subway => "subway",
            Layer::Generic => "generic",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub name: String,
    pub layer: Layer,
    /// Economic value per step while the node delivers service.
    pub base_reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
}

impl Edge {
    pub fn new(src: usize, dst: usize) -> Self {
        Edge { src, dst }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonDenseId { position: usize, id: usize },
    NegativeReward { node: usize },
    UnknownNode { id: usize },
    SelfLoop { node: usize },
    DuplicateEdge { src: usize, dst: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonDenseId { position, id } => {
                write!(f, "node at position {position} has id {id}; ids must be 0..n-1 in order")
            }
            Violation::NegativeReward { node } => write!(f, "negative base_reward at node {node}"),
            Violation::UnknownNode { id } => write!(f, "unknown node id {id}"),
            Violation::SelfLoop { node } => write!(f, "self-loop at node {node}"),
            Violation::DuplicateEdge { src, dst } => write!(f, "duplicate edge ({src}, {dst})"),
        }
    }
}

/// Every invariant violation found in a node/edge list. Empty iff well-formed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        use alloc::string::ToString;
        self.violations.iter().any(|v| v.to_string().contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("invalid network: {0}")]
    Invalid(ValidationReport),
    #[error("node index {index} out of range for a network of {n} nodes")]
    Index { index: usize, n: usize },
}

impl core::error::Error for ValidationReport {}

/// Checks a raw node/edge list without constructing a [`Network`].
pub fn validate(nodes: &[Node], edges: &[Edge]) -> ValidationReport {
    let mut violations = Vec::new();
    for (position, node) in nodes.iter().enumerate() {
        if node.id != position {
            violations.push(Violation::NonDenseId { position, id: node.id });
        }
        if !(node.base_reward >= 0.0) {
            violations.push(Violation::NegativeReward { node: node.id });
        }
    }
    let n = nodes.len();
    let mut seen = BTreeSet::new();
    for e in edges {
        for id in [e.src, e.dst] {
            if id >= n {
                violations.push(Violation::UnknownNode { id });
            }
        }
        if e.src == e.dst {
            violations.push(Violation::SelfLoop { node: e.src });
        }
        if !seen.insert(*e) {
            violations.push(Violation::DuplicateEdge { src: e.src, dst: e.dst });
        }
    }
    ValidationReport { violations }
}

/// A validated dependency graph with precomputed parent scopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    scopes: Vec<Vec<usize>>,
}

impl Network {
    /// Builds a network; edges are stored sorted so that scopes and exports
    /// do not depend on input order.
    pub fn new(nodes: Vec<Node>, mut edges: Vec<Edge>) -> Result<Self, NetworkError> {
        let report = validate(&nodes, &edges);
        if !report.is_empty() {
            return Err(NetworkError::Invalid(report));
        }
        edges.sort_unstable();
        let mut scopes: Vec<Vec<usize>> = (0..nodes.len()).map(|i| alloc::vec![i]).collect();
        for e in &edges {
            scopes[e.dst].push(e.src);
        }
        for s in &mut scopes {
            s.sort_unstable();
        }
        Ok(Network { nodes, edges, scopes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Option<&Node> {
        self.nodes.get(i)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `{i} ∪ parents(i)`, ascending.
    pub fn neighborhood(&self, i: usize) -> Result<&[usize], NetworkError> {
        self.scopes.get(i).map(Vec::as_slice).ok_or(NetworkError::Index { index: i, n: self.len() })
    }

    /// Parents of `i` (its scope without `i` itself).
    pub fn parents(&self, i: usize) -> Result<impl Iterator<Item = usize> + '_, NetworkError> {
        Ok(self.neighborhood(i)?.iter().copied().filter(move |&j| j != i))
    }

    /// Percentage of edges whose endpoints both work; 100 for an edgeless graph.
    pub fn connectivity_metric(&self, x: &SystemState) -> f64 {
        debug_assert_eq!(x.len(), self.len());
        if self.edges.is_empty() {
            return 100.0;
        }
        let alive = self.edges.iter().filter(|e| x.get(e.src) && x.get(e.dst)).count();
        100.0 * alive as f64 / self.edges.len() as f64
    }

    pub fn layer_members(&self, layer: Layer) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter(move |n| n.layer == layer).map(|n| n.id)
    }
}
