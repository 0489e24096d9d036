use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::CostMatrix;
use crate::error::{Error, Result};

/// A coupling between two discrete measures plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub plan: Array2<f64>,
    /// Entropic regularization; 0 for exact solutions.
    pub gamma: f64,
    pub iterations: usize,
    /// Max absolute deviation of row/column sums from the prescribed masses.
    pub marginal_error: f64,
    pub converged: bool,
}

impl TransportPlan {
    /// `Σ π_ij C_ij`.
    pub fn transport_cost(&self, cost: &CostMatrix) -> f64 {
        (&self.plan * &cost.0).sum()
    }

    pub fn marginal_violation(&self, p_s: &[f64], p_t: &[f64]) -> f64 {
        marginal_violation(&self.plan, p_s, p_t)
    }
}

pub(crate) fn marginal_violation(plan: &Array2<f64>, p_s: &[f64], p_t: &[f64]) -> f64 {
    let rows = plan
        .rows()
        .into_iter()
        .zip(p_s)
        .map(|(r, p)| (r.sum() - p).abs())
        .fold(0.0, f64::max);
    let cols = plan
        .columns()
        .into_iter()
        .zip(p_t)
        .map(|(c, q)| (c.sum() - q).abs())
        .fold(0.0, f64::max);
    rows.max(cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinkhornConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-6,
        }
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn validate_masses(p: &[f64], n: usize, what: &str) -> Result<()> {
    if p.len() != n {
        return Err(Error::invalid(format!("{what} masses: expected {n}, got {}", p.len())));
    }
    if p.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
        return Err(Error::invalid(format!("{what} masses must be finite and nonnegative")));
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("{what} masses must sum to 1")));
    }
    Ok(())
}

/// Entropic OT: minimizes `Σ π_ij C_ij + γ Σ π_ij ln π_ij` over couplings
/// with marginals `p_s`, `p_t`.
///
/// Runs alternating dual updates in the log domain (so small `γ` does not
/// underflow) until the largest marginal violation drops below `tol` or
/// `max_iter` is reached. A plan is always returned; `converged` says which.
pub fn sinkhorn(
    cost: &CostMatrix,
    p_s: &[f64],
    p_t: &[f64],
    gamma: f64,
    cfg: &SinkhornConfig,
) -> Result<TransportPlan> {
    let (n, m) = cost.dim();
    if n == 0 || m == 0 {
        return Err(Error::invalid("empty cost matrix"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    validate_masses(p_s, n, "source")?;
    validate_masses(p_t, m, "target")?;
    let c = &cost.0;
    let log_p: Vec<f64> = p_s.iter().map(|p| p.ln()).collect();
    let log_q: Vec<f64> = p_t.iter().map(|q| q.ln()).collect();

    // Potentials f, g with π_ij = exp((f_i + g_j − C_ij)/γ).
    let mut f = Array1::<f64>::zeros(n);
    let mut g = Array1::<f64>::zeros(m);
    let mut iterations = 0;
    let mut error = f64::INFINITY;

    while iterations < cfg.max_iter {
        iterations += 1;
        for i in 0..n {
            let lse = log_sum_exp((0..m).map(|j| (g[j] - c[[i, j]]) / gamma));
            f[i] = gamma * (log_p[i] - lse);
        }
        for j in 0..m {
            let lse = log_sum_exp((0..n).map(|i| (f[i] - c[[i, j]]) / gamma));
            g[j] = gamma * (log_q[j] - lse);
        }
        // Columns are exact after the g-update; rows carry the error.
        error = (0..n)
            .map(|i| {
                let row: f64 = (0..m)
                    .map(|j| ((f[i] + g[j] - c[[i, j]]) / gamma).exp())
                    .sum();
                (row - p_s[i]).abs()
            })
            .fold(0.0, f64::max);
        if error < cfg.tol {
            break;
        }
    }

    let plan = Array2::from_shape_fn((n, m), |(i, j)| {
        let v = ((f[i] + g[j] - c[[i, j]]) / gamma).exp();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    });
    let marginal_error = marginal_violation(&plan, p_s, p_t).max(error);
    Ok(TransportPlan {
        plan,
        gamma,
        iterations,
        marginal_error,
        converged: marginal_error < cfg.tol,
    })
}
