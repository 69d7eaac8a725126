//! [`LpBackend`] adapter for the Clarabel interior-point solver, for
//! compiled programs too large for the simplex backends.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT, ZeroConeT,
};
use resplan_core::lp::{LpBackend, LpError, LpProblem, LpSolution, LpStatus, Sense};

type Coeffs = Vec<(usize, f64)>;

/// Primal-dual interior-point method from the `clarabel` crate.
#[derive(Debug, Clone, Copy)]
pub struct Clarabel {
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for Clarabel {
    fn default() -> Self {
        Clarabel { tol: 1e-9, max_iter: 500 }
    }
}

impl LpBackend for Clarabel {
    fn name(&self) -> &str {
        "clarabel"
    }

    fn solve(&self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        problem.check()?;
        let n = problem.num_vars();
        // (row coefficients, rhs, source row) in `a x + s = b` form
        let mut eq: Vec<(Coeffs, f64, usize)> = Vec::new();
        let mut ineq: Vec<(Coeffs, f64, Option<usize>)> = Vec::new();
        let mut sign = vec![1.0; problem.rows.len()];
        for (r, row) in problem.rows.iter().enumerate() {
            match row.sense {
                Sense::Eq => eq.push((row.coeffs.clone(), row.rhs, r)),
                Sense::Le => ineq.push((row.coeffs.clone(), row.rhs, Some(r))),
                Sense::Ge => {
                    sign[r] = -1.0;
                    ineq.push((row.coeffs.iter().map(|&(j, a)| (j, -a)).collect(), -row.rhs, Some(r)));
                }
            }
        }
        for (j, b) in problem.bounds.iter().enumerate() {
            if b.lower.is_finite() {
                ineq.push((vec![(j, -1.0)], -b.lower, None));
            }
            if b.upper.is_finite() {
                ineq.push((vec![(j, 1.0)], b.upper, None));
            }
        }
        let m = eq.len() + ineq.len();
        let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut rhs = Vec::with_capacity(m);
        let mut origin = Vec::with_capacity(m);
        let rows = eq.iter().map(|(c, b, r)| (c, *b, Some(*r))).chain(ineq.iter().map(|(c, b, r)| (c, *b, *r)));
        for (k, (coeffs, b, r)) in rows.enumerate() {
            for &(j, a) in coeffs {
                columns[j].push((k, a));
            }
            rhs.push(b);
            origin.push(r);
        }
        let mut colptr = Vec::with_capacity(n + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0);
        for col in &mut columns {
            col.sort_by_key(|&(k, _)| k);
            let start = rowval.len();
            for &(k, a) in col.iter() {
                if rowval.len() > start && rowval.last() == Some(&k) {
                    *nzval.last_mut().unwrap() += a;
                } else {
                    rowval.push(k);
                    nzval.push(a);
                }
            }
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(m, n, colptr, rowval, nzval);
        let p = CscMatrix::zeros((n, n));
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        if !eq.is_empty() {
            cones.push(ZeroConeT(eq.len()));
        }
        if !ineq.is_empty() {
            cones.push(NonnegativeConeT(ineq.len()));
        }
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .tol_gap_abs(self.tol)
            .tol_gap_rel(self.tol)
            .tol_feas(self.tol)
            .max_iter(self.max_iter)
            .build()
            .map_err(|e| LpError::Invalid(format!("solver settings: {e}")))?;
        let mut solver = DefaultSolver::new(&p, &problem.objective, &a, &rhs, &cones, settings)
            .map_err(|e| LpError::Invalid(format!("{e}")))?;
        solver.solve();
        let sol = &solver.solution;
        let iterations = sol.iterations as usize;
        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => LpStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => LpStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => LpStatus::Unbounded,
            other => return Err(LpError::Numerical(format!("interior-point solver stopped: {other:?}"))),
        };
        if status != LpStatus::Optimal {
            return Ok(LpSolution {
                status,
                values: Vec::new(),
                duals: Vec::new(),
                objective: if status == LpStatus::Unbounded { f64::NEG_INFINITY } else { f64::NAN },
                iterations,
            });
        }
        let mut duals = vec![0.0; problem.rows.len()];
        for (k, r) in origin.iter().enumerate() {
            if let Some(r) = *r {
                duals[r] = -sign[r] * sol.z[k];
            }
        }
        let values = sol.x.clone();
        Ok(LpSolution { status, objective: problem.objective_value(&values), values, duals, iterations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use resplan_core::lp::{Bounds, DenseSimplex};

    #[test]
    fn agrees_with_dense_simplex() {
        let mut lp = LpProblem::new(2);
        lp.objective = vec![-1.0, -2.0];
        lp.bounds = vec![Bounds::NON_NEGATIVE, Bounds::FREE];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Le, 4.0);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Ge, -2.0);
        let a = Clarabel::default().solve(&lp).unwrap();
        let b = DenseSimplex::default().solve(&lp).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-6);
        for (x, y) in a.duals.iter().zip(&b.duals) {
            assert!((x - y).abs() < 1e-6, "{:?} vs {:?}", a.duals, b.duals);
        }
    }

    #[test]
    fn equality_duals_match() {
        let mut lp = LpProblem::new(2);
        lp.objective = vec![1.0, 3.0];
        lp.bounds = vec![Bounds::NON_NEGATIVE, Bounds::NON_NEGATIVE];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 2.0);
        lp.add_row(vec![(0, 1.0)], Sense::Le, 1.5);
        let a = Clarabel::default().solve(&lp).unwrap();
        let b = DenseSimplex::default().solve(&lp).unwrap();
        assert!((a.objective - b.objective).abs() < 1e-6);
        for (x, y) in a.duals.iter().zip(&b.duals) {
            assert!((x - y).abs() < 1e-6, "{:?} vs {:?}", a.duals, b.duals);
        }
    }

    #[test]
    fn reports_infeasible() {
        let mut lp = LpProblem::new(1);
        lp.objective = vec![1.0];
        lp.bounds = vec![Bounds::NON_NEGATIVE];
        lp.add_row(vec![(0, 1.0)], Sense::Le, -1.0);
        assert_eq!(Clarabel::default().solve(&lp).unwrap().status, LpStatus::Infeasible);
    }
}
