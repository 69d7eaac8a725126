//! Repair and maintenance planning for interdependent infrastructure networks.
//!
//! Each node of an aggregated dependency graph is either working or failed,
//! and each controllable node can be repaired (or maintained) at a cost. The
//! system dynamics form a factored MDP: every node's next state depends only
//! on its own state, its parents' states and its own action. Long-run value
//! is approximated by `V(x) = w₀ + Σ wᵢ xᵢ`, the weights come from an approximate
//! linear program compiled by variable elimination, and the resulting greedy
//! policy decomposes into independent per-node decisions.
//!
//! The crate is `no_std` (with `alloc`). Scenario files, exports and the
//! command-line tool live in the `resplan` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod exact;
pub mod factored_lp;
pub mod fmdp;
pub mod generate;
pub mod lp;
pub mod network;
pub mod policy;
pub mod scenario;
pub mod sim;

mod bits;

pub use exact::ValueTable;
pub use factored_lp::{AlpConfig, AlpSolution, Weights};
pub use fmdp::{ActionVector, FactoredModel, SystemState};
pub use network::{Layer, Network, Node};
pub use policy::{Policy, PolicyKind};
pub use scenario::{AlphaSpec, Scenario};
