use ndarray::Array2;

use super::{EmpiricalMeasure, TransportPlan};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MappedPoints {
    /// One row per kept source point.
    pub points: Array2<f64>,
    /// Source rows that produced `points`, in order.
    pub kept: Vec<usize>,
    /// Source rows with no transported mass.
    pub dropped: Vec<usize>,
}

/// Map each source point to the plan-weighted mean of the targets,
/// `x̂_i = Σ_j π_ij y_j / Σ_j π_ij`. With uniform source masses this is
/// `n_s · π · Y`. Rows without mass are dropped and reported.
pub fn barycentric_map(plan: &TransportPlan, target: &EmpiricalMeasure) -> Result<MappedPoints> {
    let (ns, nt) = plan.plan.dim();
    if nt != target.len() {
        return Err(Error::invalid(format!(
            "plan has {nt} columns but target has {} points",
            target.len()
        )));
    }
    let mut kept = Vec::with_capacity(ns);
    let mut dropped = Vec::new();
    for (i, row) in plan.plan.rows().into_iter().enumerate() {
        if row.sum() > 0.0 {
            kept.push(i);
        } else {
            dropped.push(i);
        }
    }
    let mut points = Array2::zeros((kept.len(), target.dim()));
    for (out, &i) in kept.iter().enumerate() {
        let row = plan.plan.row(i);
        let mass = row.sum();
        let mut acc = points.row_mut(out);
        for (j, &w) in row.iter().enumerate() {
            if w != 0.0 {
                acc.scaled_add(w / mass, &target.points().row(j));
            }
        }
    }
    Ok(MappedPoints { points, kept, dropped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn plan(p: Array2<f64>) -> TransportPlan {
        TransportPlan { plan: p, gamma: 1.0, iterations: 1, marginal_error: 0.0, converged: true }
    }

    #[test]
    fn single_target_collapses_everything() {
        let t = EmpiricalMeasure::uniform(array![[2.0, -1.0]]).unwrap();
        let m = barycentric_map(&plan(array![[0.3], [0.7]]), &t).unwrap();
        assert_eq!(m.points, array![[2.0, -1.0], [2.0, -1.0]]);
    }

    #[test]
    fn midpoint() {
        let t = EmpiricalMeasure::uniform(array![[0.0, 0.0], [2.0, 4.0]]).unwrap();
        let m = barycentric_map(&plan(array![[0.5, 0.5]]), &t).unwrap();
        assert_eq!(m.points, array![[1.0, 2.0]]);
    }

    #[test]
    fn zero_rows_dropped() {
        let t = EmpiricalMeasure::uniform(array![[1.0], [3.0]]).unwrap();
        let m = barycentric_map(&plan(array![[0.25, 0.25], [0.0, 0.0], [0.0, 0.5]]), &t).unwrap();
        assert_eq!(m.kept, vec![0, 2]);
        assert_eq!(m.dropped, vec![1]);
        assert_eq!(m.points, array![[2.0], [3.0]]);
    }

    #[test]
    fn uniform_source_matches_scaled_product() {
        let t = EmpiricalMeasure::uniform(array![[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]).unwrap();
        let pi = array![[0.3, 0.2, 0.0], [0.0, 0.1, 0.4]];
        let m = barycentric_map(&plan(pi.clone()), &t).unwrap();
        let closed = pi.dot(t.points()) * 2.0;
        for (a, b) in m.points.iter().zip(closed.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
