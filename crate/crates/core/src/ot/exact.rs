//! Exact optimal transport for small instances via a dense two-phase
//! simplex with Bland's rule (which rules out cycling on degenerate
//! transportation polytopes).

use ndarray::Array2;

use super::sinkhorn::{marginal_violation, validate_masses};
use super::{CostMatrix, TransportPlan};
use crate::error::{Error, Result};

pub const EXACT_MAX_POINTS: usize = 8;
const EPS: f64 = 1e-12;

struct Tableau {
    /// `rows × (cols + 1)`; last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (r, line) in self.t.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = line[col];
            if factor != 0.0 {
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Reduced costs of `cost` with respect to the current basis.
    fn reduced(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, tj) in d.iter_mut().zip(&self.t[r][..self.cols]) {
                    *dj -= cb * tj;
                }
            }
        }
        d
    }

    /// Minimize `cost` over columns `allowed`; Bland's rule.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        for _ in 0..100_000 {
            let d = self.reduced(cost);
            let Some(enter) = (0..allowed).find(|&j| d[j] < -EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.t.len() {
                let a = self.t[r][enter];
                if a > EPS {
                    let ratio = self.t[r][self.cols] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - EPS
                                || ((ratio - lratio).abs() <= EPS && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let (row, _) = leave.ok_or_else(|| Error::invalid("linear program is unbounded"))?;
            self.pivot(row, enter);
        }
        Err(Error::invalid("simplex iteration limit reached"))
    }
}

/// Minimize `c·x` subject to `A x = b`, `x ≥ 0`.
pub(crate) fn simplex(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    let m = a.len();
    let n = c.len();
    let cols = n + m;
    let mut t = Vec::with_capacity(m);
    for (r, (row, &rhs)) in a.iter().zip(b).enumerate() {
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        let mut line = vec![0.0; cols + 1];
        for (j, v) in row.iter().enumerate() {
            line[j] = sign * v;
        }
        line[n + r] = 1.0;
        line[cols] = sign * rhs;
        t.push(line);
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        cols,
    };

    // Phase 1: drive the artificials to zero.
    let mut phase1 = vec![0.0; cols];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    tab.optimize(&phase1, cols)?;
    let infeasibility: f64 = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= n)
        .map(|(r, _)| tab.t[r][cols])
        .sum();
    if infeasibility > 1e-9 {
        return Err(Error::invalid("linear program is infeasible"));
    }
    // Pivot zero-level artificials out; drop rows that are redundant.
    let mut r = 0;
    while r < tab.t.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| tab.t[r][j].abs() > EPS) {
                Some(j) => tab.pivot(r, j),
                None => {
                    tab.t.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2 over the original columns only.
    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat(0.0).take(m));
    tab.optimize(&phase2, n)?;

    let mut x = vec![0.0; n];
    for (r, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.t[r][cols].max(0.0);
        }
    }
    Ok(x)
}

/// Exact unregularized optimum for `n_s, n_t ≤ 8`.
pub fn exact_ot_small(cost: &CostMatrix, p_s: &[f64], p_t: &[f64]) -> Result<TransportPlan> {
    let (ns, nt) = cost.dim();
    if ns == 0 || nt == 0 {
        return Err(Error::invalid("empty cost matrix"));
    }
    if ns > EXACT_MAX_POINTS || nt > EXACT_MAX_POINTS {
        return Err(Error::invalid(format!(
            "exact solver limited to {EXACT_MAX_POINTS} points per side, got {ns}×{nt}"
        )));
    }
    validate_masses(p_s, ns, "source")?;
    validate_masses(p_t, nt, "target")?;

    let var = |i: usize, j: usize| i * nt + j;
    let mut a = Vec::with_capacity(ns + nt);
    let mut b = Vec::with_capacity(ns + nt);
    for (i, &p) in p_s.iter().enumerate() {
        let mut row = vec![0.0; ns * nt];
        (0..nt).for_each(|j| row[var(i, j)] = 1.0);
        a.push(row);
        b.push(p);
    }
    for (j, &q) in p_t.iter().enumerate() {
        let mut row = vec![0.0; ns * nt];
        (0..ns).for_each(|i| row[var(i, j)] = 1.0);
        a.push(row);
        b.push(q);
    }
    let c: Vec<f64> = cost.0.iter().copied().collect();
    let x = simplex(&a, &b, &c)?;
    let plan = Array2::from_shape_vec((ns, nt), x).expect("ns·nt variables");
    let marginal_error = marginal_violation(&plan, p_s, p_t);
    Ok(TransportPlan {
        plan,
        gamma: 0.0,
        iterations: 0,
        marginal_error,
        converged: true,
    })
}
