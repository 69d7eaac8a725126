use alloc::vec::Vec;
use core::fmt;

use super::expr::LinearExpr;
use crate::bits::bit;

/// A binary variable of the factor graph.
///
/// The derived order puts every state variable before every action variable,
/// which is the canonical scope order used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    State(usize),
    Action(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::State(i) => write!(f, "x{i}"),
            Var::Action(i) => write!(f, "a{i}"),
        }
    }
}

/// Table of linear expressions over every assignment of `scope`.
///
/// Entry `k` belongs to the assignment where `scope[j]` takes bit `j` of `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub scope: Vec<Var>,
    pub entries: Vec<LinearExpr>,
}

impl Factor {
    /// Builds a factor by evaluating `f` on every assignment of `scope`,
    /// given as a slice of bits parallel to `scope`.
    pub fn from_fn(scope: Vec<Var>, mut f: impl FnMut(&[bool]) -> LinearExpr) -> Self {
        debug_assert!(scope.windows(2).all(|w| w[0] < w[1]), "scope must be ascending");
        let mut bits = alloc::vec![false; scope.len()];
        let entries = (0..1usize << scope.len())
            .map(|code| {
                for (k, b) in bits.iter_mut().enumerate() {
                    *b = bit(code, k);
                }
                f(&bits)
            })
            .collect();
        Factor { scope, entries }
    }

    pub fn constant(value: f64) -> Self {
        Factor { scope: Vec::new(), entries: alloc::vec![LinearExpr::constant(value)] }
    }

    pub fn contains(&self, v: Var) -> bool {
        self.scope.binary_search(&v).is_ok()
    }

    /// Entry for the assignment where `value_of(var)` gives each scope bit.
    pub fn entry_for(&self, mut value_of: impl FnMut(Var) -> bool) -> &LinearExpr {
        let code = self.scope.iter().enumerate().fold(0, |acc, (k, &v)| acc | ((value_of(v) as usize) << k));
        &self.entries[code]
    }
}
