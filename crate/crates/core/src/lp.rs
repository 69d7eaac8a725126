//! Linear programs and a dense two-phase primal simplex.
//!
//! Problems are stated as `min cᵀx` subject to sparse rows with `≤`, `=` or
//! `≥` senses and per-variable bounds (either side may be infinite). Other
//! solvers plug in through [`LpBackend`].
//!
//! Free variables are kept as single columns: a nonbasic free column may
//! enter in either direction (its sign is flipped when it has to decrease),
//! and once basic it never blocks the ratio test.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bits::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const NON_NEGATIVE: Bounds = Bounds { lower: 0.0, upper: f64::INFINITY };
    pub const FREE: Bounds = Bounds { lower: f64::NEG_INFINITY, upper: f64::INFINITY };
}

/// `min objectiveᵀ x` subject to `rows` and `bounds`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub bounds: Vec<Bounds>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem { objective: vec![0.0; num_vars], rows: Vec::new(), bounds: vec![Bounds::NON_NEGATIVE; num_vars] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(LpRow { coeffs, sense, rhs });
    }

    /// Rejects inconsistent dimensions and non-finite data.
    pub fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(LpError::Invalid(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Invalid("non-finite objective coefficient".into()));
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Invalid(format!("row {r}: non-finite right-hand side")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(LpError::Invalid(format!("row {r}: bad coefficient for variable {j}")));
                }
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lower > b.upper || b.lower == f64::INFINITY || b.upper == f64::NEG_INFINITY {
                return Err(LpError::Invalid(format!("variable {j}: empty bounds")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound by `x`, scaled by the row's magnitude.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let mut lhs = 0.0;
            let mut scale = 1.0 + row.rhs.abs();
            for &(j, a) in &row.coeffs {
                lhs += a * x[j];
                scale += (a * x[j]).abs();
            }
            let v = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v / scale);
        }
        for (j, b) in self.bounds.iter().enumerate() {
            worst = worst.max((b.lower - x[j]) / (1.0 + x[j].abs())).max((x[j] - b.upper) / (1.0 + x[j].abs()));
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values; empty unless `status` is optimal.
    pub values: Vec<f64>,
    /// Row multipliers `y` with `c − Aᵀy` equal to the reduced costs; empty
    /// unless optimal or when the backend does not report them.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    Invalid(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
}

/// Anything that can solve an [`LpProblem`].
pub trait LpBackend {
    fn name(&self) -> &str;
    fn solve(&self, problem: &LpProblem) -> Result<LpSolution, LpError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest-index entering and leaving variables throughout.
    Bland,
    /// Most negative reduced cost; switches to Bland's rule after a run of
    /// degenerate pivots and back once the objective strictly improves.
    DantzigBlandFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSimplex {
    pub tol: f64,
    pub pivot_rule: PivotRule,
    pub max_iterations: usize,
}

impl Default for DenseSimplex {
    fn default() -> Self {
        DenseSimplex { tol: 1e-9, pivot_rule: PivotRule::DantzigBlandFallback, max_iterations: 1_000_000 }
    }
}

impl DenseSimplex {
    pub fn with_tol(tol: f64) -> Self {
        DenseSimplex { tol, ..Default::default() }
    }

    pub fn bland(tol: f64) -> Self {
        DenseSimplex { tol, pivot_rule: PivotRule::Bland, ..Default::default() }
    }
}

impl LpBackend for DenseSimplex {
    fn name(&self) -> &str {
        "dense-simplex"
    }

    fn solve(&self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        solve_lp(problem, self)
    }
}

/// Solves `problem` with the dense simplex.
pub fn solve_lp(problem: &LpProblem, opts: &DenseSimplex) -> Result<LpSolution, LpError> {
    if !(opts.tol > 0.0) {
        return Err(LpError::Invalid("tolerance must be positive".into()));
    }
    problem.check()?;
    let mut t = Tableau::build(problem, opts)?;
    let status = t.run()?;
    match status {
        LpStatus::Optimal => {}
        other => {
            return Ok(LpSolution {
                status: other,
                values: Vec::new(),
                duals: Vec::new(),
                objective: if other == LpStatus::Unbounded { f64::NEG_INFINITY } else { f64::NAN },
                iterations: t.iterations,
            })
        }
    }
    let values = t.primal_values();
    let duals = t.duals();
    let violation = problem.max_violation(&values);
    let feas_tol = sqrt(opts.tol).max(opts.tol);
    if violation > feas_tol {
        return Err(LpError::Numerical(format!("returned point violates a constraint by {violation:.3e} (relative)")));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: problem.objective_value(&values),
        values,
        duals,
        iterations: t.iterations,
    })
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lower + x'`
    Shift(f64),
    /// `x = upper − x'`
    Mirror(f64),
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

/// Pivots between full recomputations of the reduced costs.
const REPRICE_EVERY: usize = 200;

/// Pivots between rebuilding the tableau from the original rows.
const REINVERT_EVERY: usize = 1000;

struct Tableau {
    rows: usize,
    /// Columns, excluding the right-hand side.
    cols: usize,
    /// Row-major `rows × (cols + 1)`; the last entry of each row is the rhs.
    a: Vec<f64>,
    /// The initial tableau, before any pivot or column flip.
    a0: Vec<f64>,
    /// Reduced costs for the active objective.
    d: Vec<f64>,
    /// Negated objective value of the active objective.
    z: f64,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    kind: Vec<ColKind>,
    free: Vec<bool>,
    flipped: Vec<bool>,
    cost: Vec<f64>,
    /// Per original row: sign applied to it and the column that formed the
    /// initial identity.
    row_sign: Vec<f64>,
    row_unit: Vec<usize>,
    original_rows: usize,
    var_map: Vec<VarMap>,
    tol: f64,
    rule: PivotRule,
    max_iterations: usize,
    iterations: usize,
}

impl Tableau {
    fn build(p: &LpProblem, opts: &DenseSimplex) -> Result<Self, LpError> {
        let n = p.num_vars();
        let mut var_map = Vec::with_capacity(n);
        // (column, coefficient sign) rows for the finite upper bounds of shifted variables
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for (j, b) in p.bounds.iter().enumerate() {
            if b.lower.is_finite() {
                var_map.push(VarMap::Shift(b.lower));
                if b.upper.is_finite() {
                    bound_rows.push((j, b.upper - b.lower));
                }
            } else if b.upper.is_finite() {
                var_map.push(VarMap::Mirror(b.upper));
            } else {
                var_map.push(VarMap::Free);
            }
        }

        // Rows in transformed variables: (dense coeffs over structurals, sense, rhs)
        struct Row {
            coeffs: Vec<(usize, f64)>,
            sense: Sense,
            rhs: f64,
        }
        let mut rows: Vec<Row> = Vec::with_capacity(p.rows.len() + bound_rows.len());
        for row in &p.rows {
            let mut rhs = row.rhs;
            let mut coeffs = Vec::with_capacity(row.coeffs.len());
            for &(j, a) in &row.coeffs {
                match var_map[j] {
                    VarMap::Shift(l) => {
                        rhs -= a * l;
                        coeffs.push((j, a));
                    }
                    VarMap::Mirror(u) => {
                        rhs -= a * u;
                        coeffs.push((j, -a));
                    }
                    VarMap::Free => coeffs.push((j, a)),
                }
            }
            rows.push(Row { coeffs, sense: row.sense, rhs });
        }
        for &(j, width) in &bound_rows {
            rows.push(Row { coeffs: vec![(j, 1.0)], sense: Sense::Le, rhs: width });
        }

        let m = rows.len();
        let num_slack = rows.iter().filter(|r| r.sense != Sense::Eq).count();
        let mut row_sign = vec![1.0; m];
        let mut needs_art = vec![false; m];
        for (r, row) in rows.iter().enumerate() {
            if row.rhs < 0.0 {
                row_sign[r] = -1.0;
            }
            let slack_sign = match row.sense {
                Sense::Le => 1.0,
                Sense::Ge => -1.0,
                Sense::Eq => 0.0,
            } * row_sign[r];
            needs_art[r] = slack_sign <= 0.0;
        }
        let num_art = needs_art.iter().filter(|&&b| b).count();
        let cols = n + num_slack + num_art;
        let width = cols + 1;
        if m.checked_mul(width).is_none_or(|s| s > 400_000_000) {
            return Err(LpError::Invalid(format!("dense tableau of {m} x {width} is too large")));
        }
        let mut a = vec![0.0; m * width];
        let mut kind = vec![ColKind::Structural; n];
        kind.extend(core::iter::repeat_n(ColKind::Slack, num_slack));
        kind.extend(core::iter::repeat_n(ColKind::Artificial, num_art));
        let mut free = vec![false; cols];
        for j in 0..n {
            free[j] = matches!(var_map[j], VarMap::Free);
        }
        let mut basis = vec![usize::MAX; m];
        let mut row_unit = vec![usize::MAX; m];
        let mut next_slack = n;
        let mut next_art = n + num_slack;
        for (r, row) in rows.iter().enumerate() {
            let s = row_sign[r];
            let base = r * width;
            for &(j, v) in &row.coeffs {
                a[base + j] += s * v;
            }
            a[base + cols] = s * row.rhs;
            if row.sense != Sense::Eq {
                let slack = match row.sense {
                    Sense::Le => 1.0,
                    _ => -1.0,
                };
                a[base + next_slack] = s * slack;
                if !needs_art[r] {
                    basis[r] = next_slack;
                    row_unit[r] = next_slack;
                }
                next_slack += 1;
            }
            if needs_art[r] {
                a[base + next_art] = 1.0;
                basis[r] = next_art;
                row_unit[r] = next_art;
                next_art += 1;
            }
        }
        let mut is_basic = vec![false; cols];
        for &b in &basis {
            is_basic[b] = true;
        }
        let mut cost = vec![0.0; cols];
        cost[..n].copy_from_slice(&p.objective);
        for (j, vm) in var_map.iter().enumerate() {
            if matches!(vm, VarMap::Mirror(_)) {
                cost[j] = -cost[j];
            }
        }
        Ok(Tableau {
            rows: m,
            cols,
            a0: a.clone(),
            a,
            d: vec![0.0; cols],
            z: 0.0,
            basis,
            is_basic,
            kind,
            free,
            flipped: vec![false; cols],
            cost,
            row_sign,
            row_unit,
            original_rows: p.rows.len(),
            var_map,
            tol: opts.tol,
            rule: opts.pivot_rule,
            max_iterations: opts.max_iterations,
            iterations: 0,
        })
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.a[r * (self.cols + 1) + self.cols]
    }

    /// Sets reduced costs for the cost vector `c` given the current basis.
    fn price(&mut self, c: &[f64]) {
        self.d.copy_from_slice(c);
        self.z = 0.0;
        let width = self.cols + 1;
        for r in 0..self.rows {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * width..(r + 1) * width];
                for (dj, &arj) in self.d.iter_mut().zip(&row[..self.cols]) {
                    *dj -= cb * arj;
                }
                self.z -= cb * row[self.cols];
            }
        }
    }

    fn run(&mut self) -> Result<LpStatus, LpError> {
        let has_art = self.kind.contains(&ColKind::Artificial);
        if has_art {
            let phase1: Vec<f64> =
                self.kind.iter().map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 }).collect();
            self.price(&phase1);
            match self.iterate(true)? {
                LpStatus::Optimal => {}
                _ => return Err(LpError::Numerical("phase one reported unbounded".into())),
            }
            let infeasibility = -self.z;
            let scale = 1.0 + (0..self.rows).map(|r| self.rhs(r).abs()).fold(0.0, f64::max);
            if infeasibility > sqrt(self.tol) * scale {
                return Ok(LpStatus::Infeasible);
            }
            self.drive_out_artificials();
        }
        let cost = self.cost.clone();
        self.price(&cost);
        self.iterate(false)
    }

    /// Pivots zero-valued artificials out of the basis where possible.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.rows {
            if self.kind[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let mut best = None;
            let mut best_abs = self.tol;
            for c in 0..self.cols {
                if self.kind[c] != ColKind::Artificial && !self.is_basic[c] {
                    let v = self.at(r, c).abs();
                    if v > best_abs {
                        best_abs = v;
                        best = Some(c);
                    }
                }
            }
            if let Some(c) = best {
                self.pivot(r, c);
            }
        }
    }

    fn eligible(&self, c: usize, phase1: bool) -> bool {
        !self.is_basic[c] && (phase1 || self.kind[c] != ColKind::Artificial)
    }

    /// Entering column and whether its sign must be flipped first.
    fn choose_entering(&self, phase1: bool, bland: bool) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool)> = None;
        let mut best_score = -self.tol;
        for c in 0..self.cols {
            if !self.eligible(c, phase1) {
                continue;
            }
            let dc = self.d[c];
            let (score, flip) = if dc < -self.tol {
                (dc, false)
            } else if self.free[c] && dc > self.tol {
                (-dc, true)
            } else {
                continue;
            };
            if bland {
                return Some((c, flip));
            }
            if score < best_score {
                best_score = score;
                best = Some((c, flip));
            }
        }
        best
    }

    fn reprice(&mut self, phase1: bool) {
        let c: Vec<f64> = if phase1 {
            self.kind.iter().map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 }).collect()
        } else {
            self.cost.clone()
        };
        self.price(&c);
    }

    /// Ratio test. Near-ties go to the larger pivot element, or to the
    /// smaller basic index under Bland's rule.
    fn choose_leaving(&self, c: usize, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for r in 0..self.rows {
            if self.free[self.basis[r]] {
                continue;
            }
            let arc = self.at(r, c);
            if arc > self.tol {
                let ratio = self.rhs(r).max(0.0) / arc;
                let better = match best {
                    None => true,
                    Some(b) => {
                        ratio < best_ratio - self.tol
                            || (ratio <= best_ratio + self.tol
                                && if bland { self.basis[r] < self.basis[b] } else { arc > self.at(b, c) })
                    }
                };
                if better {
                    best = Some(r);
                    best_ratio = best_ratio.min(ratio);
                }
            }
        }
        best
    }

    fn flip_column(&mut self, c: usize) {
        let width = self.cols + 1;
        for r in 0..self.rows {
            self.a[r * width + c] = -self.a[r * width + c];
        }
        self.d[c] = -self.d[c];
        self.cost[c] = -self.cost[c];
        self.flipped[c] = !self.flipped[c];
    }

    fn iterate(&mut self, phase1: bool) -> Result<LpStatus, LpError> {
        let mut degenerate_run = 0usize;
        let mut bland = self.rule == PivotRule::Bland;
        let mut repriced = false;
        let mut fresh = false;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
            if self.iterations % REPRICE_EVERY == REPRICE_EVERY - 1 && !repriced {
                if self.iterations % REINVERT_EVERY == REINVERT_EVERY - 1 {
                    self.reinvert();
                }
                self.reprice(phase1);
            }
            let Some((c, flip)) = self.choose_entering(phase1, bland) else {
                if !fresh && self.iterations > 0 {
                    fresh = self.reinvert();
                    self.reprice(phase1);
                    if fresh {
                        continue;
                    }
                }
                return Ok(LpStatus::Optimal);
            };
            if flip {
                self.flip_column(c);
            }
            let Some(r) = self.choose_leaving(c, bland) else {
                if !repriced {
                    // drift in the incrementally updated reduced costs can fake a ray
                    if flip {
                        self.flip_column(c);
                    }
                    self.reprice(phase1);
                    repriced = true;
                    continue;
                }
                if phase1 {
                    return Err(LpError::Numerical("unbounded direction in phase one".into()));
                }
                return Ok(LpStatus::Unbounded);
            };
            repriced = false;
            fresh = false;
            let step = self.rhs(r).max(0.0) / self.at(r, c);
            self.pivot(r, c);
            self.iterations += 1;
            if self.rule == PivotRule::DantzigBlandFallback {
                if step <= self.tol {
                    degenerate_run += 1;
                    if degenerate_run >= DEGENERATE_RUN {
                        bland = true;
                    }
                } else {
                    degenerate_run = 0;
                    bland = false;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let pivot_row = eliminate(&mut self.a, self.rows, self.cols + 1, r, c);
        let factor = self.d[c];
        if factor != 0.0 {
            for (k, &v) in pivot_row.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                if k < self.cols {
                    self.d[k] -= factor * v;
                } else {
                    self.z -= factor * v;
                }
            }
            self.d[c] = 0.0;
        }
        self.is_basic[self.basis[r]] = false;
        self.basis[r] = c;
        self.is_basic[c] = true;
    }

    /// Rebuilds the tableau for the current basis from the original rows,
    /// discarding accumulated rounding. Keeps the old tableau if the basis
    /// looks singular.
    fn reinvert(&mut self) -> bool {
        let width = self.cols + 1;
        let mut a = self.a0.clone();
        for c in (0..self.cols).filter(|&c| self.flipped[c]) {
            for r in 0..self.rows {
                a[r * width + c] = -a[r * width + c];
            }
        }
        // slack and artificial columns are still unit vectors, so they go first
        let mut order = self.basis.clone();
        order.sort_by_key(|&c| self.kind[c] == ColKind::Structural);
        let mut basis = vec![usize::MAX; self.rows];
        for c in order {
            let mut best = None;
            let mut best_abs = 1e-11;
            for (r, &b) in basis.iter().enumerate() {
                let v = a[r * width + c].abs();
                if b == usize::MAX && v > best_abs {
                    best_abs = v;
                    best = Some(r);
                }
            }
            let Some(r) = best else { return false };
            eliminate(&mut a, self.rows, width, r, c);
            basis[r] = c;
        }
        self.a = a;
        self.basis = basis;
        true
    }

    fn primal_values(&self) -> Vec<f64> {
        let n = self.var_map.len();
        let mut x = vec![0.0; self.cols];
        for r in 0..self.rows {
            x[self.basis[r]] = self.rhs(r);
        }
        (0..n)
            .map(|j| {
                let v = if self.flipped[j] { -x[j] } else { x[j] };
                match self.var_map[j] {
                    VarMap::Shift(l) => l + v,
                    VarMap::Mirror(u) => u - v,
                    VarMap::Free => v,
                }
            })
            .collect()
    }

    fn duals(&self) -> Vec<f64> {
        (0..self.original_rows)
            .map(|r| {
                let unit = self.row_unit[r];
                // the unit column's phase-two cost is zero, so its reduced cost is −π_r
                self.row_sign[r] * -self.d[unit]
            })
            .collect()
    }
}

/// Gauss-Jordan step on a row-major matrix; returns the scaled pivot row.
fn eliminate(a: &mut [f64], rows: usize, width: usize, r: usize, c: usize) -> Vec<f64> {
    let piv = a[r * width + c];
    let mut pivot_row: Vec<f64> = a[r * width..(r + 1) * width].iter().map(|v| v / piv).collect();
    pivot_row[c] = 1.0;
    let nz: Vec<usize> = (0..width).filter(|&k| pivot_row[k] != 0.0).collect();
    a[r * width..(r + 1) * width].copy_from_slice(&pivot_row);
    for rr in (0..rows).filter(|&rr| rr != r) {
        let factor = a[rr * width + c];
        if factor == 0.0 {
            continue;
        }
        let row = &mut a[rr * width..(rr + 1) * width];
        for &k in &nz {
            row[k] -= factor * pivot_row[k];
        }
        row[c] = 0.0;
    }
    pivot_row
}
