//! Dense two-phase simplex for the small linear programs used by the
//! polytope code (Chebyshev centers and boundedness probes).
//!
//! Problems have the form `maximize c·x subject to A x ≤ b` with free `x`.
//! Bland's rule keeps degenerate vertices (very common for lattice cells)
//! from cycling.

use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: DVector<f64>, value: f64 },
    Unbounded,
    Infeasible,
}

struct Tableau {
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Maximizes `cost·y` over the current feasible tableau. Columns with
    /// `allowed[j] == false` never enter. Returns false when unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> bool {
        let max_iters = 50_000;
        for _ in 0..max_iters {
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    rc -= cost[b] * self.t[i][j];
                }
                if rc > 1e-10 {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return true;
            };
            let mut best: Option<(f64, usize)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][col];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((ratio, i)),
                        Some((r, bi)) => {
                            if ratio < r - 1e-13
                                || (ratio <= r + 1e-13 && self.basis[i] < self.basis[bi])
                            {
                                Some((ratio, i))
                            } else {
                                Some((r, bi))
                            }
                        }
                    };
                }
            }
            match best {
                None => return false,
                Some((_, row)) => self.pivot(row, col),
            }
        }
        true
    }
}

/// Solves `max c·x  s.t.  A x ≤ b` with `x` unrestricted in sign.
pub fn maximize(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> LpOutcome {
    let m = a.nrows();
    let n = a.ncols();
    let negative_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let k = negative_rows.len();
    let cols = 2 * n + m + k;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art = 0;
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[(i, j)];
            t[i][n + j] = -sign * a[(i, j)];
        }
        t[i][2 * n + i] = sign;
        t[i][cols] = sign * b[i];
        if b[i] < 0.0 {
            let col = 2 * n + m + art;
            t[i][col] = 1.0;
            basis[i] = col;
            art += 1;
        } else {
            basis[i] = 2 * n + i;
        }
    }
    let mut tab = Tableau { t, basis, cols };

    if k > 0 {
        let mut phase1 = vec![0.0; cols];
        for c in phase1.iter_mut().skip(2 * n + m) {
            *c = -1.0;
        }
        let allowed = vec![true; cols];
        tab.optimize(&phase1, &allowed);
        let infeasibility: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= 2 * n + m)
            .map(|i| tab.rhs(i))
            .sum();
        let scale = b.iter().fold(1.0_f64, |s, x| s.max(x.abs()));
        if infeasibility > 1e-9 * scale {
            return LpOutcome::Infeasible;
        }
        // Drive remaining zero-level artificials out of the basis.
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= 2 * n + m {
                let col = (0..2 * n + m).find(|&j| tab.t[i][j].abs() > 1e-9);
                match col {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = c[j];
        cost[n + j] = -c[j];
    }
    let allowed: Vec<bool> = (0..cols).map(|j| j < 2 * n + m).collect();
    if !tab.optimize(&cost, &allowed) {
        return LpOutcome::Unbounded;
    }
    let mut y = vec![0.0; cols];
    for (i, &bcol) in tab.basis.iter().enumerate() {
        y[bcol] = tab.rhs(i);
    }
    let x = DVector::from_fn(n, |j, _| y[j] - y[n + j]);
    let value = c.dot(&x);
    LpOutcome::Optimal { x, value }
}
