use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};

/// Which nodes a field is allowed to be nonzero on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Box,
    Omega,
    Exterior,
}

impl Support {
    fn allows(self, grid: &Grid, node: usize) -> bool {
        match self {
            Support::Box => true,
            Support::Omega => grid.in_omega(node),
            Support::Exterior => !grid.in_omega(node),
        }
    }
}

/// Node values over the whole box at the time levels `0, dt, ..., M dt`; columns are time levels.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    values: DMatrix<f64>,
    dt: f64,
    support: Support,
}

impl SpaceTimeField {
    pub fn zeros(nodes: usize, steps: usize, dt: f64, support: Support) -> Self {
        SpaceTimeField {
            values: DMatrix::zeros(nodes, steps + 1),
            dt,
            support,
        }
    }

    pub fn from_values(values: DMatrix<f64>, dt: f64, support: Support) -> Self {
        SpaceTimeField {
            values,
            dt,
            support,
        }
    }

    /// Samples `f(node, t)` on every node allowed by `support`.
    pub fn from_fn(
        grid: &Grid,
        steps: usize,
        dt: f64,
        support: Support,
        mut f: impl FnMut(usize, f64) -> f64,
    ) -> Self {
        let mut values = DMatrix::zeros(grid.len(), steps + 1);
        for n in 0..=steps {
            let t = n as f64 * dt;
            for node in 0..grid.len() {
                if support.allows(grid, node) {
                    values[(node, n)] = f(node, t);
                }
            }
        }
        SpaceTimeField {
            values,
            dt,
            support,
        }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn steps(&self) -> usize {
        self.values.ncols() - 1
    }

    pub fn final_time(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn column(&self, n: usize) -> DVector<f64> {
        self.values.column(n).into_owned()
    }

    /// `h(t) ↦ h(T - t)`.
    pub fn time_reversed(&self) -> Self {
        let m = self.values.ncols();
        let values = DMatrix::from_fn(self.values.nrows(), m, |i, n| self.values[(i, m - 1 - n)]);
        SpaceTimeField {
            values,
            dt: self.dt,
            support: self.support,
        }
    }

    /// Checks finiteness and that nothing leaks outside the support.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.values.nrows() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} nodes", grid.len()),
                got: format!("{} nodes", self.values.nrows()),
            });
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "field has non-finite values".into(),
            ));
        }
        for node in 0..grid.len() {
            if !self.support.allows(grid, node) && self.values.row(node).iter().any(|&v| v != 0.0) {
                return Err(Error::Support(format!(
                    "node {node} is nonzero outside the {:?} support",
                    self.support
                )));
            }
        }
        Ok(())
    }

    /// Whether `f(t) = f(T - t)` at all stored levels within `tol`.
    pub fn is_time_reversal_invariant(&self, tol: f64) -> bool {
        let m = self.values.ncols();
        (0..m).all(|n| {
            self.values
                .column(n)
                .iter()
                .zip(self.values.column(m - 1 - n).iter())
                .all(|(a, b)| (a - b).abs() <= tol)
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        SpaceTimeField {
            values: &self.values * a,
            dt: self.dt,
            support: self.support,
        }
    }

    /// Keeps only the rows in `nodes`, zeroing the rest.
    pub fn restricted(&self, nodes: &[usize], support: Support) -> Self {
        let mut values = DMatrix::zeros(self.values.nrows(), self.values.ncols());
        for &i in nodes {
            values.set_row(i, &self.values.row(i));
        }
        SpaceTimeField {
            values,
            dt: self.dt,
            support,
        }
    }

    /// Rows `nodes` as a compact matrix.
    pub fn rows(&self, nodes: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(nodes.len(), self.values.ncols(), |i, n| {
            self.values[(nodes[i], n)]
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `h^d`-weighted, trapezoid-in-time L² norm over the rows in `nodes`.
    pub fn l2_norm(&self, grid: &Grid, nodes: &[usize]) -> f64 {
        let w = trapezoid_weights(self.steps(), self.dt);
        let mut acc = 0.0;
        for (n, wn) in w.iter().enumerate() {
            let col: f64 = nodes.iter().map(|&i| self.values[(i, n)].powi(2)).sum();
            acc += wn * col;
        }
        (acc * grid.cell()).sqrt()
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.values.shape() != other.values.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.values.shape()),
                got: format!("{:?}", other.values.shape()),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let support = if self.support == other.support {
            self.support
        } else {
            Support::Box
        };
        Ok(SpaceTimeField {
            values: &self.values + &other.values,
            dt: self.dt,
            support,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let support = if self.support == other.support {
            self.support
        } else {
            Support::Box
        };
        Ok(SpaceTimeField {
            values: &self.values - &other.values,
            dt: self.dt,
            support,
        })
    }
}

/// Trapezoid weights for `steps` intervals of width `dt`.
pub fn trapezoid_weights(steps: usize, dt: f64) -> Vec<f64> {
    let mut w = vec![dt; steps + 1];
    w[0] = 0.5 * dt;
    w[steps] = 0.5 * dt;
    if steps == 0 {
        w[0] = 0.0;
    }
    w
}
