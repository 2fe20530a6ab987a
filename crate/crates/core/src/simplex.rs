//! Dense two-phase tableau simplex, Dantzig pricing with a Bland fallback
//! against cycling.
//!
//! Solves `min c^T x` subject to linear constraints and `x >= 0`. Problem
//! sizes here are a few hundred rows at most, so a dense tableau is fine.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_PIVOTS: usize = 100_000;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub max_pivots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible { phase_one_objective: f64 },
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
            max_pivots: DEFAULT_MAX_PIVOTS,
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.num_vars));
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    rows: usize,
    /// Structural + slack + artificial columns (rhs stored separately).
    cols: usize,
    first_artificial: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let rows = lp.constraints.len();
        let n = lp.num_vars;
        let num_slack = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();

        // Row signs so every rhs is nonnegative; a row whose slack ends up with
        // coefficient +1 starts with that slack basic, others need an artificial.
        let mut slack_col = vec![None; rows];
        let mut sign = vec![1.0; rows];
        let mut needs_artificial = vec![true; rows];
        let mut next_slack = n;
        for (i, c) in lp.constraints.iter().enumerate() {
            sign[i] = if c.rhs < 0.0 { -1.0 } else { 1.0 };
            let slack_coeff = match c.relation {
                Relation::Le => Some(1.0),
                Relation::Ge => Some(-1.0),
                Relation::Eq => None,
            };
            if let Some(sc) = slack_coeff {
                slack_col[i] = Some((next_slack, sc * sign[i]));
                needs_artificial[i] = sc * sign[i] < 0.0;
                next_slack += 1;
            }
        }
        let first_artificial = n + num_slack;
        let num_art = needs_artificial.iter().filter(|&&b| b).count();
        let cols = first_artificial + num_art;

        let mut a = vec![0.0; rows * cols];
        let mut rhs = vec![0.0; rows];
        let mut basis = vec![0; rows];
        let mut next_art = first_artificial;
        for (i, c) in lp.constraints.iter().enumerate() {
            let row = &mut a[i * cols..(i + 1) * cols];
            for &(j, v) in &c.coeffs {
                row[j] += sign[i] * v;
            }
            rhs[i] = sign[i] * c.rhs;
            if let Some((col, v)) = slack_col[i] {
                row[col] = v;
                if !needs_artificial[i] {
                    basis[i] = col;
                }
            }
            if needs_artificial[i] {
                row[next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
        Self {
            rows,
            cols,
            first_artificial,
            a,
            rhs,
            basis,
            pivots: 0,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [f64], cost_rhs: &mut f64) {
        let cols = self.cols;
        let p = self.a[r * cols + c];
        for j in 0..cols {
            self.a[r * cols + j] /= p;
        }
        self.rhs[r] /= p;
        let pivot_row: Vec<f64> = self.a[r * cols..(r + 1) * cols].to_vec();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.a[i * cols + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * cols..(i + 1) * cols];
            for (x, &pv) in row.iter_mut().zip(&pivot_row) {
                *x -= f * pv;
            }
            row[c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
        }
        let f = cost[c];
        if f != 0.0 {
            for (x, &pv) in cost.iter_mut().zip(&pivot_row) {
                *x -= f * pv;
            }
            cost[c] = 0.0;
            *cost_rhs -= f * pivot_rhs;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Dantzig pricing, falling back to Bland's rule while pivots stay
    /// degenerate. Columns `>= limit` never enter.
    fn optimize(&mut self, cost: &mut [f64], cost_rhs: &mut f64, limit: usize, max_pivots: usize) -> Result<bool> {
        let mut degenerate_streak = 0usize;
        loop {
            let enter = if degenerate_streak >= DEGENERATE_SWITCH {
                (0..limit).find(|&j| cost[j] < -COST_TOL)
            } else {
                (0..limit)
                    .filter(|&j| cost[j] < -COST_TOL)
                    .min_by(|&a, &b| cost[a].total_cmp(&cost[b]))
            };
            let Some(enter) = enter else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let aij = self.at(i, enter);
                if aij > PIVOT_TOL {
                    let ratio = self.rhs[i].max(0.0) / aij;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = 1e-12 * br.max(1.0);
                            if ratio < br - tie || (ratio <= br + tie && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(false);
            };
            if self.pivots >= max_pivots {
                return Err(Error::SolverStalled {
                    iterations: self.pivots,
                });
            }
            if ratio <= FEAS_TOL * 1e-3 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(r, enter, cost, cost_rhs);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpOutcome> {
        let n = lp.num_vars;

        // Phase one: minimize the sum of artificials.
        if self.first_artificial < self.cols {
            let mut cost = vec![0.0; self.cols];
            let mut cost_rhs = 0.0;
            cost[self.first_artificial..].fill(1.0);
            for i in 0..self.rows {
                if self.basis[i] >= self.first_artificial {
                    let row = &self.a[i * self.cols..(i + 1) * self.cols];
                    for (c, &v) in cost.iter_mut().zip(row) {
                        *c -= v;
                    }
                    cost_rhs -= self.rhs[i];
                }
            }
            let cols = self.cols;
            self.optimize(&mut cost, &mut cost_rhs, cols, lp.max_pivots)?;
            let infeasibility = -cost_rhs;
            if infeasibility > FEAS_TOL {
                return Ok(LpOutcome::Infeasible {
                    phase_one_objective: infeasibility,
                });
            }
            // Drive zero-level artificials out of the basis where possible.
            for i in 0..self.rows {
                if self.basis[i] >= self.first_artificial {
                    if let Some(j) = (0..self.first_artificial).find(|&j| self.at(i, j).abs() > PIVOT_TOL) {
                        self.pivot(i, j, &mut cost, &mut cost_rhs);
                    }
                }
            }
        }

        // Phase two on the original objective.
        let mut cost = vec![0.0; self.cols];
        cost[..n].copy_from_slice(&lp.objective);
        let mut cost_rhs = 0.0;
        for i in 0..self.rows {
            let b = self.basis[i];
            let cb = if b < n { lp.objective[b] } else { 0.0 };
            if cb != 0.0 {
                let row = &self.a[i * self.cols..(i + 1) * self.cols];
                for (c, &v) in cost.iter_mut().zip(row) {
                    *c -= cb * v;
                }
                cost_rhs -= cb * self.rhs[i];
            }
        }
        let limit = self.first_artificial;
        if !self.optimize(&mut cost, &mut cost_rhs, limit, lp.max_pivots)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![0.0; n];
        for i in 0..self.rows {
            if self.basis[i] < n {
                x[self.basis[i]] = self.rhs[i].max(0.0);
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpOutcome::Optimal { x, objective })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-12);
                assert_abs_diff_eq!(x[1], 6.0, epsilon = 1e-12);
                assert_abs_diff_eq!(objective, -36.0, epsilon = 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge_constraints() {
        // min x + y s.t. x + y = 1, x >= 0.25, y >= 0.5
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add(vec![(0, 1.0)], Relation::Ge, 0.25);
        lp.add(vec![(1, 1.0)], Relation::Ge, 0.5);
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert_abs_diff_eq!(objective, 1.0, epsilon = 1e-12);
                assert!(x[0] >= 0.25 - 1e-12 && x[1] >= 0.5 - 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![(0, 1.0)], Relation::Le, -1.0);
        assert!(matches!(lp.solve().unwrap(), LpOutcome::Infeasible { .. }));
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, 0.0];
        lp.add(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_rows() {
        // min x s.t. -x <= -3  (x >= 3)
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add(vec![(0, -1.0)], Relation::Le, -3.0);
        match lp.solve().unwrap() {
            LpOutcome::Optimal { objective, .. } => assert_abs_diff_eq!(objective, 3.0, epsilon = 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, objective } => {
                assert_abs_diff_eq!(objective, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stall_cap_reported() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        lp.max_pivots = 1;
        assert!(matches!(lp.solve(), Err(Error::SolverStalled { .. })));
    }
}
