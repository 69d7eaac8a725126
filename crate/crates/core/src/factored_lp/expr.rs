use alloc::collections::BTreeMap;
use core::fmt;

/// A decision variable of the approximate LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LpVar {
    /// Basis weight `wᵢ`.
    Weight(usize),
    /// Weight of the constant basis function.
    Bias,
    /// Auxiliary variable created by variable elimination, by creation index.
    Aux(usize),
}

impl fmt::Display for LpVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpVar::Weight(i) => write!(f, "w{i}"),
            LpVar::Bias => f.write_str("w_const"),
            LpVar::Aux(k) => write!(f, "aux{k}"),
        }
    }
}

/// `constant + Σ coefficient · variable`, with zero coefficients dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearExpr {
    pub constant: f64,
    terms: BTreeMap<LpVar, f64>,
}

impl LinearExpr {
    pub fn zero() -> Self {
        LinearExpr::default()
    }

    pub fn constant(value: f64) -> Self {
        LinearExpr { constant: value, terms: BTreeMap::new() }
    }

    pub fn term(var: LpVar, coefficient: f64) -> Self {
        let mut e = LinearExpr::zero();
        e.add_term(var, coefficient);
        e
    }

    pub fn add_term(&mut self, var: LpVar, coefficient: f64) {
        if coefficient == 0.0 {
            return;
        }
        let entry = self.terms.entry(var).or_insert(0.0);
        *entry += coefficient;
        if *entry == 0.0 {
            self.terms.remove(&var);
        }
    }

    pub fn add_assign(&mut self, other: &LinearExpr) {
        self.constant += other.constant;
        for (&v, &c) in &other.terms {
            self.add_term(v, c);
        }
    }

    pub fn coefficient(&self, var: LpVar) -> f64 {
        self.terms.get(&var).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (LpVar, f64)> + '_ {
        self.terms.iter().map(|(&v, &c)| (v, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// Value with variables taken from `lookup`.
    pub fn eval(&self, mut lookup: impl FnMut(LpVar) -> f64) -> f64 {
        self.constant + self.terms.iter().map(|(&v, &c)| c * lookup(v)).sum::<f64>()
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.terms {
            if first {
                write!(f, "{c} {v}")?;
            } else if *c < 0.0 {
                write!(f, " - {} {v}", -c)?;
            } else {
                write!(f, " + {c} {v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant < 0.0 {
            write!(f, " - {}", -self.constant)
        } else if self.constant > 0.0 {
            write!(f, " + {}", self.constant)
        } else {
            Ok(())
        }
    }
}
