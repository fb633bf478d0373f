//! Dense revised simplex for `min c^T x  s.t.  A x = b, x >= 0`, started from
//! a caller-supplied feasible basis and open to column generation: columns can
//! be appended between solves and the previous basis is reused.
//!
//! The basis inverse is kept explicitly and refactorized every
//! [`REFACTOR_EVERY`] pivots. Pricing is Dantzig's rule; after
//! [`BLAND_AFTER`] consecutive degenerate pivots it falls back to Bland's rule
//! (smallest eligible index for both entering and leaving variables) for the
//! rest of the solve. Returning to Dantzig after a tiny nonzero step lets
//! rounding noise restart a cycle.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const REFACTOR_EVERY: usize = 64;
const BLAND_AFTER: usize = 32;
const PIVOT_TOL: f64 = 1e-9;
const DEFAULT_COST_TOL: f64 = 1e-11;
const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    /// `sign * e_row`.
    Unit { row: usize, sign: f64 },
    Dense(Vec<f64>),
}

impl Column {
    fn dot(&self, y: &[f64]) -> f64 {
        match self {
            Column::Unit { row, sign } => sign * y[*row],
            Column::Dense(v) => v.iter().zip(y).map(|(a, b)| a * b).sum(),
        }
    }

    fn entry(&self, r: usize) -> f64 {
        match self {
            Column::Unit { row, sign } => {
                if *row == r {
                    *sign
                } else {
                    0.0
                }
            }
            Column::Dense(v) => v[r],
        }
    }
}

#[derive(Debug, Clone)]
pub struct RevisedSimplex {
    rows: usize,
    columns: Vec<Column>,
    costs: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Row-major `rows x rows`.
    binv: Vec<f64>,
    x_basic: Vec<f64>,
    since_refactor: usize,
    pivots: usize,
    cost_tol: f64,
}

impl RevisedSimplex {
    /// `basis[r]` is the column basic in row `r`; it must be primal feasible.
    pub fn new(
        rhs: Vec<f64>,
        columns: Vec<Column>,
        costs: Vec<f64>,
        basis: Vec<usize>,
    ) -> Result<Self> {
        let rows = rhs.len();
        if columns.len() != costs.len() {
            return Err(Error::Dimension {
                expected: columns.len(),
                got: costs.len(),
            });
        }
        if basis.len() != rows {
            return Err(Error::Dimension {
                expected: rows,
                got: basis.len(),
            });
        }
        let mut is_basic = vec![false; columns.len()];
        for &b in &basis {
            if b >= columns.len() || is_basic[b] {
                return Err(Error::InvalidArgument(format!("bad basis index {b}")));
            }
            is_basic[b] = true;
        }
        let mut lp = Self {
            rows,
            columns,
            costs,
            rhs,
            basis,
            is_basic,
            binv: vec![0.0; rows * rows],
            x_basic: vec![0.0; rows],
            since_refactor: 0,
            pivots: 0,
            cost_tol: DEFAULT_COST_TOL,
        };
        lp.refactor()?;
        if let Some(bad) = lp.x_basic.iter().find(|&&x| x < -1e-9) {
            return Err(Error::InvalidArgument(format!(
                "initial basis is infeasible (x_B has {bad})"
            )));
        }
        Ok(lp)
    }

    pub fn set_cost_tolerance(&mut self, tol: f64) {
        self.cost_tol = tol;
    }

    pub fn add_column(&mut self, column: Column, cost: f64) -> usize {
        self.columns.push(column);
        self.costs.push(cost);
        self.is_basic.push(false);
        self.columns.len() - 1
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn pivots(&self) -> usize {
        self.pivots
    }

    pub fn objective(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.x_basic)
            .map(|(&j, x)| self.costs[j] * x)
            .sum()
    }

    /// Nonzero primal values as `(column, value)`.
    pub fn primal(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self
            .basis
            .iter()
            .zip(&self.x_basic)
            .filter(|(_, &x)| x > 0.0)
            .map(|(&j, &x)| (j, x))
            .collect();
        out.sort_by_key(|&(j, _)| j);
        out
    }

    /// Simplex multipliers `y = c_B^T B^{-1}`.
    pub fn duals(&self) -> Vec<f64> {
        let m = self.rows;
        let mut y = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = self.costs[j];
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yk, b) in y.iter_mut().zip(row) {
                    *yk += c * b;
                }
            }
        }
        y
    }

    /// Pivots until no column prices out below `-cost_tol`.
    pub fn solve(&mut self, max_pivots: usize) -> Result<()> {
        let mut degenerate_run = 0usize;
        for _ in 0..max_pivots {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals();
            let bland = degenerate_run >= BLAND_AFTER;
            let Some(enter) = self.price(&y, bland) else {
                return Ok(());
            };
            let w = self.ftran(enter);
            let Some(leave) = self.ratio_test(&w, bland) else {
                return Err(Error::Numerical("linear program is unbounded".into()));
            };
            // Same clamped value as the ratio test; a slightly negative
            // basic would otherwise step backwards and can cycle.
            let step = self.x_basic[leave].max(0.0) / w[leave];
            let gain = -step * (self.costs[enter] - self.columns[enter].dot(&y));
            if gain <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(enter, leave, &w, step);
        }
        Err(Error::Numerical(format!(
            "simplex did not converge within {max_pivots} pivots"
        )))
    }

    /// Replaces the right-hand side and recomputes the basic solution, which
    /// may become infeasible; see [`RevisedSimplex::dual_solve`].
    pub fn set_rhs(&mut self, rhs: Vec<f64>) -> Result<()> {
        if rhs.len() != self.rows {
            return Err(Error::Dimension {
                expected: self.rows,
                got: rhs.len(),
            });
        }
        self.rhs = rhs;
        self.refactor()
    }

    /// Dual simplex: restores primal feasibility while keeping every reduced
    /// cost nonnegative. Leaving row is the most negative basic value.
    pub fn dual_solve(&mut self, max_pivots: usize) -> Result<()> {
        let m = self.rows;
        for _ in 0..max_pivots {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let Some((leave, _)) = self
                .x_basic
                .iter()
                .enumerate()
                .filter(|(_, &x)| x < -FEASIBILITY_TOL)
                .min_by(|a, b| a.1.total_cmp(b.1))
            else {
                for x in &mut self.x_basic {
                    if *x < 0.0 {
                        *x = 0.0;
                    }
                }
                return Ok(());
            };
            let y = self.duals();
            let row = &self.binv[leave * m..(leave + 1) * m];
            let mut best: Option<(usize, f64, f64)> = None;
            for (j, col) in self.columns.iter().enumerate() {
                if self.is_basic[j] {
                    continue;
                }
                let alpha = col.dot(row);
                if alpha >= -PIVOT_TOL {
                    continue;
                }
                let d = (self.costs[j] - col.dot(&y)).max(0.0);
                let ratio = d / -alpha;
                let better = match best {
                    None => true,
                    Some((_, br, ba)) => {
                        ratio < br - 1e-12 || (ratio <= br + 1e-12 && -alpha > -ba)
                    }
                };
                if better {
                    best = Some((j, ratio, alpha));
                }
            }
            let Some((enter, _, _)) = best else {
                return Err(Error::Numerical("linear program is infeasible".into()));
            };
            let w = self.ftran(enter);
            let step = self.x_basic[leave] / w[leave];
            self.pivot(enter, leave, &w, step);
        }
        Err(Error::Numerical(format!(
            "dual simplex did not converge within {max_pivots} pivots"
        )))
    }

    fn price(&self, y: &[f64], bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, col) in self.columns.iter().enumerate() {
            if self.is_basic[j] {
                continue;
            }
            let d = self.costs[j] - col.dot(y);
            if d < -self.cost_tol {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.rows;
        match &self.columns[j] {
            Column::Unit { row, sign } => (0..m).map(|r| sign * self.binv[r * m + row]).collect(),
            Column::Dense(a) => (0..m)
                .map(|r| {
                    self.binv[r * m..(r + 1) * m]
                        .iter()
                        .zip(a)
                        .map(|(b, x)| b * x)
                        .sum()
                })
                .collect(),
        }
    }

    fn ratio_test(&self, w: &[f64], bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (r, &wr) in w.iter().enumerate() {
            if wr <= PIVOT_TOL {
                continue;
            }
            let ratio = self.x_basic[r].max(0.0) / wr;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * bratio.max(1.0);
                    let better = if tie {
                        if bland {
                            self.basis[r] < self.basis[br]
                        } else {
                            wr > w[br]
                        }
                    } else {
                        ratio < bratio
                    };
                    if better {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, enter: usize, leave: usize, w: &[f64], step: f64) {
        let m = self.rows;
        for (r, x) in self.x_basic.iter_mut().enumerate() {
            if r != leave {
                *x -= step * w[r];
                if *x < 0.0 && *x > -1e-13 {
                    *x = 0.0;
                }
            }
        }
        self.x_basic[leave] = step;

        let inv = 1.0 / w[leave];
        let (before, rest) = self.binv.split_at_mut(leave * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        pivot_row.iter_mut().for_each(|x| *x *= inv);
        for (chunk, offset) in [(before, 0usize), (after, leave + 1)] {
            for (k, row) in chunk.chunks_mut(m).enumerate() {
                let f = w[k + offset];
                if f != 0.0 {
                    for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                        *x -= f * p;
                    }
                }
            }
        }

        self.is_basic[self.basis[leave]] = false;
        self.is_basic[enter] = true;
        self.basis[leave] = enter;
        self.since_refactor += 1;
        self.pivots += 1;
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.rows;
        let b = DMatrix::from_fn(m, m, |r, c| self.columns[self.basis[c]].entry(r));
        let inv = b
            .try_inverse()
            .ok_or_else(|| Error::Numerical("basis matrix became singular".into()))?;
        for r in 0..m {
            for c in 0..m {
                self.binv[r * m + c] = inv[(r, c)];
            }
        }
        for r in 0..m {
            let x: f64 = (0..m).map(|c| inv[(r, c)] * self.rhs[c]).sum();
            self.x_basic[r] = if x < 0.0 && x > -1e-11 { 0.0 } else { x };
        }
        self.since_refactor = 0;
        Ok(())
    }
}
