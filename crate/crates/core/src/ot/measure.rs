use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::par;

/// Weighted point cloud `Σ p_i δ_{x_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Array2<f64>,
    masses: Array1<f64>,
}

impl EmpiricalMeasure {
    /// Uniform masses `1/n`.
    pub fn uniform(points: Array2<f64>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::invalid("empirical measure needs at least one point"));
        }
        Ok(Self {
            points,
            masses: Array1::from_elem(n, 1.0 / n as f64),
        })
    }

    /// Explicit masses, renormalized to sum to one.
    pub fn weighted(points: Array2<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.nrows() == 0 || masses.len() != points.nrows() {
            return Err(Error::invalid("one nonnegative mass per point required"));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::invalid("masses must be finite and nonnegative"));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("total mass must be positive"));
        }
        Ok(Self {
            points,
            masses: Array1::from_iter(masses.into_iter().map(|m| m / total)),
        })
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn masses(&self) -> &Array1<f64> {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }
}

/// Squared Euclidean cost `C[i][j] = ‖x_i − y_j‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix(pub Array2<f64>);

impl CostMatrix {
    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn mean(&self) -> f64 {
        self.0.mean().unwrap_or(0.0)
    }
}

pub fn cost_matrix(source: &EmpiricalMeasure, target: &EmpiricalMeasure) -> Result<CostMatrix> {
    squared_distances(source.points(), target.points())
}

pub(crate) fn squared_distances(xs: &Array2<f64>, ys: &Array2<f64>) -> Result<CostMatrix> {
    if xs.ncols() != ys.ncols() {
        return Err(Error::invalid(format!(
            "point dimensions differ: {} vs {}",
            xs.ncols(),
            ys.ncols()
        )));
    }
    let (n, m) = (xs.nrows(), ys.nrows());
    let rows = par::map_range(n, |i| {
        let x = xs.row(i);
        (0..m)
            .map(|j| {
                x.iter()
                    .zip(ys.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
    });
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(CostMatrix(
        Array2::from_shape_vec((n, m), flat).expect("shape matches row count"),
    ))
}
