//! Seeded scenario generators: small random models satisfying the
//! structural assumptions, and the two-layer coupled demo network.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::RngExt;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::fmdp::RewardFactor;
use crate::network::{Edge, Layer, Network, Node};
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub n: usize,
    /// Most dependency parents per node.
    pub max_parents: usize,
    /// Probability that a node gets an explicit transition table instead of
    /// the shared parametric one.
    pub explicit_share: f64,
    /// Probability that a node is controllable.
    pub controllable_share: f64,
}

impl RandomSpec {
    pub fn new(n: usize) -> Self {
        RandomSpec { n, max_parents: 2, explicit_share: 0.5, controllable_share: 0.9 }
    }
}

/// Explicit table with deterministic repair, no spontaneous recovery and
/// survival strictly lower under every degraded parent pattern.
fn explicit_cpt(rng: &mut ChaCha8Rng, scope_len: usize, self_pos: usize) -> Vec<f64> {
    let full = (1usize << scope_len) - 1;
    let healthy = rng.random_range(0.8..0.999);
    let mut table = vec![0.0; 2 << scope_len];
    for code in 0..=full {
        table[code] = if code & (1 << self_pos) == 0 {
            0.0
        } else if code == full {
            healthy
        } else {
            healthy * rng.random_range(0.05..0.95)
        };
        table[code + (1 << scope_len)] = 1.0;
    }
    table
}

/// Random scenario whose model satisfies all three structural assumptions.
pub fn random_scenario(seed: u64, spec: &RandomSpec) -> Result<Scenario, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let nodes: Vec<Node> = (0..n)
        .map(|id| Node { id, name: format!("n{id}"), layer: Layer::Generic, base_reward: rng.random_range(0.0..20.0) })
        .collect();
    let mut edges = Vec::new();
    for dst in 0..n {
        let mut candidates: Vec<usize> = (0..n).filter(|&s| s != dst).collect();
        candidates.shuffle(&mut rng);
        let k = rng.random_range(0..=spec.max_parents.min(candidates.len()));
        edges.extend(candidates[..k].iter().map(|&src| Edge::new(src, dst)));
    }
    let network = Network::new(nodes, edges)?;
    let mut sc = Scenario::with_defaults(network);
    sc.gamma = rng.random_range(0.8..0.95);
    sc.p0 = rng.random_range(0.005..0.1);
    sc.pc = rng.random_range(0.1..0.5);
    for i in 0..n {
        let c0 = rng.random_range(0.0..0.5);
        sc.costs[i] = (c0, c0 + rng.random_range(0.0..10.0));
        sc.controllable[i] = rng.random_bool(spec.controllable_share);
        let scope = sc.network.neighborhood(i)?.to_vec();
        if rng.random_bool(spec.explicit_share) {
            let pos = scope.iter().position(|&j| j == i).unwrap();
            sc.explicit_cpts.insert(i, explicit_cpt(&mut rng, scope.len(), pos));
        }
        if scope.len() > 1 && rng.random_bool(0.3) {
            let partner = scope[rng.random_range(0..scope.len())];
            let value = sc.network.nodes()[i].base_reward;
            sc.reward_factors.insert(i, RewardFactor::all_working(i, vec![i, partner], value));
        }
    }
    sc.validate()?;
    Ok(sc)
}

fn ring(members: &[usize], edges: &mut Vec<Edge>) {
    let m = members.len();
    for k in 0..m {
        let (a, b) = (members[k], members[(k + 1) % m]);
        edges.push(Edge::new(a, b));
        edges.push(Edge::new(b, a));
    }
}

/// Two-layer coupled network of `n` nodes: a power ring and a subway ring
/// (bidirectional), each subway station fed by one power node. The feeder
/// matching is a random rotation with random adjacent swaps, so couplings
/// stay local along the rings. Rewards are random and sum to 100.
pub fn demo_network(seed: u64, n: usize) -> Result<Network, ScenarioError> {
    if n < 6 {
        return Err(ScenarioError::Range { field: "scale".into(), message: format!("need at least 6 nodes, got {n}") });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let power = n.div_ceil(2);
    let power_ids: Vec<usize> = (0..power).collect();
    let subway_ids: Vec<usize> = (power..n).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let nodes = (0..n)
        .map(|id| {
            let (layer, name) =
                if id < power { (Layer::Power, format!("P{id}")) } else { (Layer::Subway, format!("S{}", id - power)) };
            Node { id, name, layer, base_reward: 100.0 * raw[id] / total }
        })
        .collect();
    let mut edges = Vec::new();
    ring(&power_ids, &mut edges);
    ring(&subway_ids, &mut edges);
    let shift = rng.random_range(0..power);
    let mut feeders: Vec<usize> = (0..power).map(|k| (k + shift) % power).collect();
    let mut k = 0;
    while k + 1 < feeders.len() {
        if rng.random_bool(0.3) {
            feeders.swap(k, k + 1);
            k += 1;
        }
        k += 1;
    }
    edges.extend(subway_ids.iter().zip(&feeders).map(|(&s, &p)| Edge::new(p, s)));
    Ok(Network::new(nodes, edges)?)
}

/// Demo scenario with default parameters on [`demo_network`].
pub fn demo_scenario(seed: u64, n: usize) -> Result<Scenario, ScenarioError> {
    let sc = Scenario::with_defaults(demo_network(seed, n)?);
    sc.validate()?;
    Ok(sc)
}
