//! Dense two-phase primal simplex.
//!
//! Pivots use Dantzig's rule with a largest-pivot tie break in the ratio
//! test. After a run of degenerate pivots the solver switches to Bland's
//! rule, which cannot cycle.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};

/// Smallest pivot element accepted.
const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;
/// Reduced costs above `-COST_TOL` count as nonnegative.
const COST_TOL: f64 = 1e-10;
/// Phase-one objective above which the problem is declared infeasible.
const FEAS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `opt c·x` subject to linear rows and per-variable bounds. Variables
/// default to `0 ≤ x < ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize, direction: Direction) -> Self {
        LinearProgram {
            direction,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_objective(&mut self, coeffs: Vec<f64>) -> &mut Self {
        self.objective = coeffs;
        self
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    /// Adds a row given as sparse `(variable, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) -> &mut Self {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(v, c) in terms {
            coeffs[v] += c;
        }
        self.add_constraint(coeffs, relation, rhs)
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            bail!(Input, "bounds given for {} and {} of {} variables", self.lower.len(), self.upper.len(), n);
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                bail!(Input, "constraint {} has {} coefficients, expected {}", i, c.coeffs.len(), n);
            }
            if c.coeffs.iter().any(|v| !v.is_finite()) || !c.rhs.is_finite() {
                bail!(Input, "constraint {} is not finite", i);
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            bail!(Input, "objective is not finite");
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                bail!(Input, "variable {} has invalid bounds", j);
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                bail!(Input, "variable {} has invalid bounds", j);
            }
        }
        Ok(())
    }
}

// How an original variable is expressed in nonnegative tableau columns:
// x = offset + sign * col (- col2 when split).
#[derive(Debug, Clone, Copy)]
struct VarMap {
    col: usize,
    sign: f64,
    offset: f64,
    neg_col: Option<usize>,
}

struct Tableau {
    rows: usize,
    cols: usize,
    // rows x (cols + 1); the last column is the right-hand side.
    a: Vec<f64>,
    basis: Vec<usize>,
    // reduced costs (cols) followed by minus the objective value
    d: Vec<f64>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.a[r * w + c];
        for k in 0..w {
            self.a[r * w + k] /= p;
        }
        self.a[r * w + c] = 1.0;
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f != 0.0 {
                for k in 0..w {
                    self.a[i * w + k] -= f * self.a[r * w + k];
                }
                self.a[i * w + c] = 0.0;
            }
        }
        let f = self.d[c];
        if f != 0.0 {
            for k in 0..w {
                self.d[k] -= f * self.a[r * w + k];
            }
            self.d[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.cols + 1;
        self.d = vec![0.0; w];
        self.d[..self.cols].copy_from_slice(cost);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for k in 0..w {
                    self.d[k] -= cb * self.a[r * w + k];
                }
            }
        }
    }

    /// Minimizes the current costs over the allowed columns. Returns false
    /// when the objective is unbounded below.
    fn optimize(&mut self, allowed: &[bool], max_iters: usize) -> Result<bool> {
        let mut degenerate = 0;
        for _ in 0..max_iters {
            let bland = degenerate >= DEGENERATE_RUN;
            let candidates = (0..self.cols).filter(|&j| allowed[j] && self.d[j] < -COST_TOL);
            let enter = if bland {
                candidates.min()
            } else {
                candidates.min_by(|&a, &b| self.d[a].total_cmp(&self.d[b]))
            };
            let Some(enter) = enter else {
                return Ok(true);
            };
            let mut min_ratio = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > PIVOT_TOL {
                    min_ratio = min_ratio.min(self.rhs(r).max(0.0) / a);
                }
            }
            if min_ratio == f64::INFINITY {
                return Ok(false);
            }
            let tol = 1e-12 * (1.0 + min_ratio);
            let mut leave: Option<usize> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a <= PIVOT_TOL || self.rhs(r).max(0.0) / a > min_ratio + tol {
                    continue;
                }
                leave = match leave {
                    None => Some(r),
                    Some(l) if bland && self.basis[r] < self.basis[l] => Some(r),
                    Some(l) if !bland && a > self.at(l, enter) => Some(r),
                    keep => keep,
                };
            }
            let r = leave.expect("a row attains the minimum ratio");
            if min_ratio <= tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, enter);
        }
        bail!(Solver, "simplex did not terminate within {} pivots", max_iters);
    }
}

/// Solves a linear program.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.check()?;
    let n = lp.num_vars();

    // Map variables to nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let map = if lo.is_finite() {
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            VarMap { col: ncols, sign: 1.0, offset: lo, neg_col: None }
        } else if hi.is_finite() {
            VarMap { col: ncols, sign: -1.0, offset: hi, neg_col: None }
        } else {
            ncols += 1;
            VarMap { col: ncols - 1, sign: 1.0, offset: 0.0, neg_col: Some(ncols) }
        };
        ncols += 1;
        maps.push(map);
    }
    let structural = ncols;

    // Rows over structural columns, with the offsets moved to the rhs.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut coeffs = vec![0.0; structural];
        let mut rhs = c.rhs;
        for (j, &v) in c.coeffs.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let m = maps[j];
            rhs -= v * m.offset;
            coeffs[m.col] += v * m.sign;
            if let Some(nc) = m.neg_col {
                coeffs[nc] -= v;
            }
        }
        rows.push((coeffs, c.relation, rhs));
    }
    for &(col, width) in &bound_rows {
        let mut coeffs = vec![0.0; structural];
        coeffs[col] = 1.0;
        rows.push((coeffs, Relation::Le, width));
    }
    for row in &mut rows {
        if row.2 < 0.0 {
            row.0.iter_mut().for_each(|v| *v = -*v);
            row.2 = -row.2;
            row.1 = match row.1 {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let num_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let num_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = structural + num_slack + num_art;
    let w = cols + 1;
    let mut t = Tableau { rows: m, cols, a: vec![0.0; m * w], basis: vec![0; m], d: Vec::new() };
    let mut slack = structural;
    let mut art = structural + num_slack;
    for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        t.a[r * w..r * w + structural].copy_from_slice(coeffs);
        t.a[r * w + cols] = *rhs;
        match rel {
            Relation::Le => {
                t.a[r * w + slack] = 1.0;
                t.basis[r] = slack;
                slack += 1;
            }
            Relation::Ge => {
                t.a[r * w + slack] = -1.0;
                slack += 1;
                t.a[r * w + art] = 1.0;
                t.basis[r] = art;
                art += 1;
            }
            Relation::Eq => {
                t.a[r * w + art] = 1.0;
                t.basis[r] = art;
                art += 1;
            }
        }
    }
    let first_art = structural + num_slack;
    let max_iters = 50_000 + 50 * (m + cols);
    let is_art = |c: usize| c >= first_art;

    if num_art > 0 {
        let cost: Vec<f64> = (0..cols).map(|c| if is_art(c) { 1.0 } else { 0.0 }).collect();
        t.set_costs(&cost);
        let allowed = vec![true; cols];
        t.optimize(&allowed, max_iters)?;
        let scale = rows.iter().fold(1.0, |acc: f64, r| acc.max(r.2.abs()));
        if -t.d[cols] > FEAS_TOL * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining artificial columns out of the basis.
        for r in 0..m {
            if is_art(t.basis[r]) {
                if let Some(c) = (0..first_art).find(|&c| t.at(r, c).abs() > 1e-9) {
                    t.pivot(r, c);
                }
            }
        }
    }

    let sign = match lp.direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    let mut cost = vec![0.0; cols];
    for (j, map) in maps.iter().enumerate() {
        let c = lp.objective[j] * sign;
        cost[map.col] += c * map.sign;
        if let Some(nc) = map.neg_col {
            cost[nc] -= c;
        }
    }
    t.set_costs(&cost);
    let allowed: Vec<bool> = (0..cols).map(|c| !is_art(c)).collect();
    if !t.optimize(&allowed, max_iters)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut col_values = vec![0.0; cols];
    for r in 0..m {
        col_values[t.basis[r]] = t.rhs(r);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|map| {
            let mut v = map.offset + map.sign * col_values[map.col];
            if let Some(nc) = map.neg_col {
                v -= col_values[nc];
            }
            v
        })
        .collect();
    let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal(LpSolution { x, objective }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_upper_bound() {
        let mut lp = LinearProgram::new(1, Direction::Maximize);
        lp.set_objective(vec![1.0]).add_constraint(vec![1.0], Relation::Le, 3.0);
        let s = lp_solve(&lp).unwrap().optimal().unwrap();
        assert!((s.x[0] - 3.0).abs() < 1e-12);
        assert!((s.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(1, Direction::Maximize);
        lp.set_objective(vec![1.0]);
        assert_eq!(lp_solve(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LinearProgram::new(1, Direction::Minimize);
        lp.set_objective(vec![1.0])
            .add_constraint(vec![1.0], Relation::Ge, 2.0)
            .add_constraint(vec![1.0], Relation::Le, 1.0);
        assert_eq!(lp_solve(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn matching_pennies_value_lp() {
        // max v s.t. x1 - x2 >= v, x2 - x1 >= v, x1 + x2 = 1; variables (x1, x2, v)
        let mut lp = LinearProgram::new(3, Direction::Maximize);
        lp.set_objective(vec![0.0, 0.0, 1.0])
            .set_free(2)
            .add_constraint(vec![1.0, -1.0, -1.0], Relation::Ge, 0.0)
            .add_constraint(vec![-1.0, 1.0, -1.0], Relation::Ge, 0.0)
            .add_constraint(vec![1.0, 1.0, 0.0], Relation::Eq, 1.0);
        let s = lp_solve(&lp).unwrap().optimal().unwrap();
        assert!(s.objective.abs() < 1e-12);
        assert!((s.x[0] - 0.5).abs() < 1e-12 && (s.x[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bounded_and_negative_ranges() {
        // min x + y with -2 <= x <= 5, y <= -1 (y unbounded below) and y >= -4
        let mut lp = LinearProgram::new(2, Direction::Minimize);
        lp.set_objective(vec![1.0, 1.0])
            .set_bounds(0, -2.0, 5.0)
            .set_bounds(1, f64::NEG_INFINITY, -1.0)
            .add_constraint(vec![0.0, 1.0], Relation::Ge, -4.0);
        let s = lp_solve(&lp).unwrap().optimal().unwrap();
        assert!((s.x[0] + 2.0).abs() < 1e-12);
        assert!((s.x[1] + 4.0).abs() < 1e-12);
        assert!((s.objective + 6.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2, Direction::Maximize);
        lp.set_objective(vec![1.0, 2.0])
            .add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0)
            .add_constraint(vec![2.0, 2.0], Relation::Eq, 2.0);
        let s = lp_solve(&lp).unwrap().optimal().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let mut lp = LinearProgram::new(2, Direction::Maximize);
        lp.add_constraint(vec![1.0], Relation::Le, 1.0);
        assert!(lp_solve(&lp).is_err());
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the textbook rule; Bland's rule does not.
        let mut lp = LinearProgram::new(4, Direction::Minimize);
        lp.set_objective(vec![-0.75, 150.0, -0.02, 6.0])
            .add_constraint(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0)
            .add_constraint(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0)
            .add_constraint(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let s = lp_solve(&lp).unwrap().optimal().unwrap();
        assert!((s.objective + 0.05).abs() < 1e-9);
    }
}
