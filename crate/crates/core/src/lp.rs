//! Two-phase dense tableau simplex for `min cᵀx  s.t.  A x = b, x ≥ 0`.
//!
//! Sized for the programs this crate builds: Blackwell garbling feasibility
//! (a few dozen variables) and grid concavification (few rows, many columns).

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Mat;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
/// Switch from Dantzig's rule to Bland's rule after this many consecutive
/// degenerate pivots.
const DEGENERATE_LIMIT: usize = 50;

#[derive(Debug, Clone)]
pub(crate) enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
    },
    /// Phase one could not drive the infeasibility below tolerance. `dual`
    /// is a Farkas vector: `dualᵀb = residual > 0` and `Aᵀdual ≤ 0` up to
    /// rounding.
    Infeasible {
        residual: f64,
        dual: Vec<f64>,
    },
    Unbounded,
}

struct Tableau {
    m: usize,
    n_total: usize,
    /// `(m + 1) × (n_total + 1)`; last row holds reduced costs, last column
    /// the right-hand side.
    t: Mat,
    basis: Vec<usize>,
    active_rows: Vec<bool>,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.n_total
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.n_total + 1;
        let p = self.t.get(row, col);
        for j in 0..width {
            let v = self.t.get(row, j) / p;
            self.t.set(row, j, v);
        }
        for i in 0..=self.m {
            if i == row {
                continue;
            }
            let f = self.t.get(i, col);
            if f == 0.0 {
                continue;
            }
            for j in 0..width {
                let v = self.t.get(i, j) - f * self.t.get(row, j);
                self.t.set(i, j, v);
            }
            self.t.set(i, col, 0.0);
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations on the current reduced-cost row. Only columns
    /// with `allowed[j]` may enter. Returns `false` when unbounded.
    fn iterate(&mut self, allowed: &[bool]) -> bool {
        let rhs = self.rhs();
        let mut degenerate = 0usize;
        let max_pivots = 50 * (self.m + self.n_total) + 1000;
        for _ in 0..max_pivots {
            let bland = degenerate >= DEGENERATE_LIMIT;
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..self.n_total {
                if !allowed[j] {
                    continue;
                }
                let r = self.t.get(self.m, j);
                if r < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(col) = enter else {
                return true;
            };
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                if !self.active_rows[i] {
                    continue;
                }
                let a = self.t.get(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.t.get(i, rhs) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best_ratio - 1e-15
                                || (ratio <= best_ratio + 1e-15 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(row) = leave else {
                return false;
            };
            if best_ratio.abs() < 1e-15 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(row, col);
        }
        true
    }
}

/// Solves the program; `feas_tol` bounds the total phase-one infeasibility
/// accepted as feasible.
pub(crate) fn solve(a: &Mat, b: &[f64], c: &[f64], feas_tol: f64) -> LpOutcome {
    let m = a.rows();
    let n = a.cols();
    let n_total = n + m;
    let mut t = Mat::zeros(m + 1, n_total + 1);
    let mut sign = vec![1.0; m];
    for i in 0..m {
        if b[i] < 0.0 {
            sign[i] = -1.0;
        }
        for j in 0..n {
            t.set(i, j, sign[i] * a.get(i, j));
        }
        t.set(i, n + i, 1.0);
        t.set(i, n_total, sign[i] * b[i]);
    }
    // Phase one: minimize the sum of artificials.
    for j in 0..n {
        let s: f64 = (0..m).map(|i| t.get(i, j)).sum();
        t.set(m, j, -s);
    }
    let total: f64 = (0..m).map(|i| t.get(i, n_total)).sum();
    t.set(m, n_total, -total);
    let mut tab = Tableau {
        m,
        n_total,
        t,
        basis: (n..n_total).collect(),
        active_rows: vec![true; m],
    };
    let all = vec![true; n_total];
    tab.iterate(&all);
    let residual = -tab.t.get(m, n_total);
    if residual > feas_tol {
        let dual = (0..m)
            .map(|i| sign[i] * (1.0 - tab.t.get(m, n + i)))
            .collect();
        return LpOutcome::Infeasible { residual, dual };
    }
    // Drive artificials out of the basis; rows where that fails are redundant.
    for i in 0..m {
        if tab.basis[i] >= n {
            let col = (0..n).find(|&j| tab.t.get(i, j).abs() > 1e-9);
            match col {
                Some(j) => tab.pivot(i, j),
                None => tab.active_rows[i] = false,
            }
        }
    }
    // Phase two.
    for j in 0..=n_total {
        tab.t.set(m, j, 0.0);
    }
    for j in 0..n {
        tab.t.set(m, j, c[j]);
    }
    let mut z = 0.0;
    for i in 0..m {
        if !tab.active_rows[i] {
            continue;
        }
        let bj = tab.basis[i];
        let cb = if bj < n { c[bj] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..n_total {
                let v = tab.t.get(m, j) - cb * tab.t.get(i, j);
                tab.t.set(m, j, v);
            }
            z += cb * tab.t.get(i, n_total);
        }
    }
    tab.t.set(m, n_total, -z);
    let mut allowed = vec![true; n_total];
    for a in allowed.iter_mut().skip(n) {
        *a = false;
    }
    if !tab.iterate(&allowed) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.active_rows[i] && tab.basis[i] < n {
            x[tab.basis[i]] = tab.t.get(i, n_total).max(0.0);
        }
    }
    let objective = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { x, objective }
}
