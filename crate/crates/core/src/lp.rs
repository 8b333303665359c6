//! Dense two-phase tableau simplex with Bland's anti-cycling rule.
//!
//! Solves `min c·x  s.t.  A x = b, x >= 0` for the small programs built by
//! the AT(n) solver (at most a few thousand variables).

use crate::error::{Error, Result};

const COST_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;

/// Equality-form linear program.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    cost: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>) -> Self {
        LinearProgram {
            cost,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds `row · x = rhs`. `row` may be shorter than the variable count.
    pub fn add_row(&mut self, mut row: Vec<f64>, rhs: f64) {
        row.resize(self.cost.len(), 0.0);
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Adds `Σ coef·x_var = rhs` from sparse `(var, coef)` pairs.
    pub fn add_sparse_row(&mut self, entries: &[(usize, f64)], rhs: f64) {
        let mut row = vec![0.0; self.cost.len()];
        for &(j, a) in entries {
            row[j] += a;
        }
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    m: usize,
    n: usize,
    width: usize,
    /// `m` constraint rows then the reduced-cost row; last column is the rhs.
    cells: Vec<f64>,
    basis: Vec<usize>,
    artificial: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.rows.len();
        let n = lp.cost.len();
        let mut rows: Vec<Vec<f64>> = lp.rows.clone();
        let mut rhs = lp.rhs.clone();
        for (row, b) in rows.iter_mut().zip(rhs.iter_mut()) {
            if *b < 0.0 {
                row.iter_mut().for_each(|a| *a = -*a);
                *b = -*b;
            }
        }

        // Reuse unit columns as the starting basis where possible.
        let mut basis = vec![usize::MAX; m];
        let mut used = vec![false; n];
        for j in 0..n {
            let mut hit = None;
            let mut count = 0;
            for (i, row) in rows.iter().enumerate() {
                if row[j] != 0.0 {
                    count += 1;
                    hit = Some(i);
                }
            }
            if count == 1 {
                let i = hit.expect("count is one");
                if basis[i] == usize::MAX && rows[i][j] > 0.0 && !used[j] {
                    let scale = rows[i][j];
                    rows[i].iter_mut().for_each(|a| *a /= scale);
                    rhs[i] /= scale;
                    basis[i] = j;
                    used[j] = true;
                }
            }
        }
        let missing: Vec<usize> = (0..m).filter(|&i| basis[i] == usize::MAX).collect();
        let total = n + missing.len();
        let width = total + 1;
        let mut cells = vec![0.0; (m + 1) * width];
        for i in 0..m {
            cells[i * width..i * width + n].copy_from_slice(&rows[i]);
            cells[i * width + total] = rhs[i];
        }
        let mut artificial = vec![false; total];
        for (a, &i) in missing.iter().enumerate() {
            cells[i * width + n + a] = 1.0;
            basis[i] = n + a;
            artificial[n + a] = true;
        }
        Tableau {
            m,
            n: total,
            width,
            cells,
            basis,
            artificial,
            pivots: 0,
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.n)
    }

    /// Loads `cost` into the reduced-cost row for the current basis.
    fn price(&mut self, cost: &[f64]) {
        let (m, w) = (self.m, self.width);
        let obj = m * w;
        for j in 0..w {
            self.cells[obj + j] = if j < self.n { cost[j] } else { 0.0 };
        }
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.cells[obj + j] -= cb * self.cells[i * w + j];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.at(r, c);
        for j in 0..w {
            self.cells[r * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.cells[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.cells[i * w + c];
            if f != 0.0 {
                let row = &mut self.cells[i * w..(i + 1) * w];
                for (a, &pr) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Dantzig pricing (most negative reduced cost, lowest index on ties)
    /// until a run of degenerate pivots, then Bland's rule for the rest of
    /// the phase, which rules out cycling.
    fn iterate(&mut self, allow: impl Fn(usize) -> bool, limit: usize) -> Result<()> {
        let obj = self.m;
        let mut degenerate_run = 0usize;
        let mut bland = false;
        loop {
            if self.pivots > limit {
                return Err(Error::IterationLimit);
            }
            let entering = if bland {
                (0..self.n).find(|&j| allow(j) && self.at(obj, j) < -COST_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.n {
                    let d = self.at(obj, j);
                    if d < -COST_TOL && allow(j) && best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((j, d));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-12
                                || (ratio <= br + 1e-12 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, ratio)) => {
                    if ratio <= 1e-12 {
                        degenerate_run += 1;
                        if degenerate_run > DEGENERATE_RUN {
                            bland = true;
                        }
                    } else {
                        degenerate_run = 0;
                    }
                    self.pivot(r, c)
                }
                None => return Err(Error::Unbounded),
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let limit = 50_000 + 50 * (self.m + self.n);
        let has_artificials = self.artificial.iter().any(|&a| a);
        if has_artificials {
            let phase_one: Vec<f64> = self
                .artificial
                .iter()
                .map(|&a| if a { 1.0 } else { 0.0 })
                .collect();
            self.price(&phase_one);
            self.iterate(|_| true, limit)?;
            let infeasibility = -self.at(self.m, self.n);
            let scale = 1.0 + lp.rhs.iter().map(|b| b.abs()).sum::<f64>();
            if infeasibility > 1e-8 * scale {
                return Err(Error::Infeasible);
            }
            // Drive remaining artificials out of the basis; rows with no
            // usable column are redundant and keep their artificial at zero.
            for r in 0..self.m {
                if self.artificial[self.basis[r]] {
                    if let Some(c) = (0..self.n)
                        .find(|&j| !self.artificial[j] && self.at(r, j).abs() > PIVOT_TOL)
                    {
                        self.pivot(r, c);
                    }
                }
            }
        }
        let mut cost = lp.cost.clone();
        cost.resize(self.n, 0.0);
        self.price(&cost);
        let artificial = self.artificial.clone();
        self.iterate(|j| !artificial[j], limit)?;

        let mut x = vec![0.0; lp.cost.len()];
        for i in 0..self.m {
            let b = self.basis[i];
            if b < x.len() {
                x[b] = self.rhs(i).max(0.0);
            }
        }
        let objective = x.iter().zip(&lp.cost).map(|(a, c)| a * c).sum();
        Ok(LpSolution {
            x,
            objective,
            pivots: self.pivots,
        })
    }
}
