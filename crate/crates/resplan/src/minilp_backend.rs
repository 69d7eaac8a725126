//! [`LpBackend`] adapter for the `minilp` sparse simplex solver.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use resplan_core::lp::{LpBackend, LpError, LpProblem, LpSolution, LpStatus, Sense};

/// Sparse revised simplex from the `minilp` crate. It reports no row duals.
#[derive(Debug, Clone, Copy, Default)]
pub struct MiniLp;

impl LpBackend for MiniLp {
    fn name(&self) -> &str {
        "minilp"
    }

    fn solve(&self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        problem.check()?;
        let mut p = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> =
            problem.objective.iter().zip(&problem.bounds).map(|(&c, b)| p.add_var(c, (b.lower, b.upper))).collect();
        for row in &problem.rows {
            let expr: Vec<_> = row.coeffs.iter().map(|&(j, a)| (vars[j], a)).collect();
            let op = match row.sense {
                Sense::Le => ComparisonOp::Le,
                Sense::Eq => ComparisonOp::Eq,
                Sense::Ge => ComparisonOp::Ge,
            };
            p.add_constraint(expr.as_slice(), op, row.rhs);
        }
        match p.solve() {
            Ok(sol) => {
                let values: Vec<f64> = vars.iter().map(|&v| *sol.var_value(v)).collect();
                Ok(LpSolution {
                    status: LpStatus::Optimal,
                    objective: problem.objective_value(&values),
                    values,
                    duals: Vec::new(),
                    iterations: 0,
                })
            }
            Err(minilp::Error::Infeasible) => Ok(empty(LpStatus::Infeasible)),
            Err(minilp::Error::Unbounded) => Ok(empty(LpStatus::Unbounded)),
        }
    }
}

fn empty(status: LpStatus) -> LpSolution {
    LpSolution { status, values: Vec::new(), duals: Vec::new(), objective: f64::NAN, iterations: 0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use resplan_core::lp::{Bounds, DenseSimplex};

    #[test]
    fn agrees_with_dense_simplex() {
        // min -x - 2y s.t. x + y <= 4, x - y >= -2, y free
        let mut lp = LpProblem::new(2);
        lp.objective = vec![-1.0, -2.0];
        lp.bounds = vec![Bounds::NON_NEGATIVE, Bounds::FREE];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Le, 4.0);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Ge, -2.0);
        let a = MiniLp.solve(&lp).unwrap();
        let b = DenseSimplex::default().solve(&lp).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-9);
        assert!((a.objective + 7.0).abs() < 1e-9);
    }

    #[test]
    fn reports_infeasible() {
        let mut lp = LpProblem::new(1);
        lp.add_row(vec![(0, 1.0)], Sense::Le, -1.0);
        assert_eq!(MiniLp.solve(&lp).unwrap().status, LpStatus::Infeasible);
    }
}
