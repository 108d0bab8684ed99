use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::field::SpaceTimeField;
use super::grid::Grid;
use crate::error::{Error, Result};

/// Eigendecomposition of the box-Dirichlet second-difference Laplacian.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigvals: DVector<f64>,
    pub eigvecs: DMatrix<f64>,
}

impl Spectrum {
    pub fn compute(grid: &Grid) -> Self {
        let n = grid.n();
        let lap1 = second_difference(n, grid.h());
        let (vals1, vecs1) = sorted_eigen(lap1);
        if grid.dim() == 1 {
            return Spectrum {
                eigvals: vals1,
                eigvecs: vecs1,
            };
        }
        let total = n * n;
        let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(total);
        for k in 0..n {
            for l in 0..n {
                pairs.push((vals1[k] + vals1[l], k, l));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut eigvals = DVector::zeros(total);
        let mut eigvecs = DMatrix::zeros(total, total);
        for (col, &(lam, k, l)) in pairs.iter().enumerate() {
            eigvals[col] = lam;
            for j in 0..n {
                for i in 0..n {
                    eigvecs[(j * n + i, col)] = vecs1[(i, k)] * vecs1[(j, l)];
                }
            }
        }
        Spectrum { eigvals, eigvecs }
    }

    /// Dense `V diag(λ^t) Vᵀ`.
    pub fn power(&self, t: f64) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.eigvecs.nrows(), self.eigvecs.ncols(), |i, k| {
            self.eigvecs[(i, k)] * power(self.eigvals[k], t)
        });
        &scaled * self.eigvecs.transpose()
    }

    pub fn len(&self) -> usize {
        self.eigvals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigvals.is_empty()
    }
}

fn power(lambda: f64, t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        lambda.max(0.0).powf(t)
    }
}

/// Tridiagonal `(-u_{i-1} + 2u_i - u_{i+1}) / h²` with zero boundary values.
pub fn second_difference(n: usize, h: f64) -> DMatrix<f64> {
    let inv = 1.0 / (h * h);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 * inv
        } else if i.abs_diff(j) == 1 {
            -inv
        } else {
            0.0
        }
    })
}

/// The second-difference Laplacian on the whole grid (Kronecker sum in 2D).
pub fn base_laplacian(grid: &Grid) -> DMatrix<f64> {
    let n = grid.n();
    let lap1 = second_difference(n, grid.h());
    if grid.dim() == 1 {
        return lap1;
    }
    let eye = DMatrix::<f64>::identity(n, n);
    lap1.kronecker(&eye) + eye.kronecker(&lap1)
}

fn sorted_eigen(m: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(order.len(), order.iter().map(|&k| eig.eigenvalues[k]));
    let vecs = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, c| {
        eig.eigenvectors[(i, order[c])]
    });
    (vals, vecs)
}

/// Spectral `s`-power of the discrete Laplacian, the fractional operator used everywhere.
#[derive(Clone, Debug)]
pub struct FracOp {
    s: f64,
    spectrum: Arc<Spectrum>,
    multiplier: DVector<f64>,
    matrix: DMatrix<f64>,
}

impl FracOp {
    pub fn new(grid: &Grid, s: f64) -> Result<Self> {
        Self::from_spectrum(Arc::new(Spectrum::compute(grid)), s)
    }

    /// Shares an existing decomposition; all powers of one grid should come through here.
    pub fn from_spectrum(spectrum: Arc<Spectrum>, s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::NonPositiveExponent(s));
        }
        let multiplier = spectrum.eigvals.map(|l| power(l, s));
        let matrix = spectrum.power(s);
        Ok(FracOp {
            s,
            spectrum,
            multiplier,
            matrix,
        })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn spectrum(&self) -> &Arc<Spectrum> {
        &self.spectrum
    }

    pub fn eigvals(&self) -> &DVector<f64> {
        &self.spectrum.eigvals
    }

    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.spectrum.eigvecs
    }

    pub fn multiplier(&self) -> &DVector<f64> {
        &self.multiplier
    }

    /// Dense matrix of the operator.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Operator with exponent `s + t` sharing this decomposition.
    pub fn with_exponent(&self, s: f64) -> Result<Self> {
        Self::from_spectrum(self.spectrum.clone(), s)
    }

    pub fn apply_vec(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} nodes", self.len()),
                got: format!("{} nodes", v.len()),
            });
        }
        Ok(&self.matrix * v)
    }

    /// Applies the operator to every time column of a box field.
    pub fn apply(&self, field: &SpaceTimeField) -> Result<SpaceTimeField> {
        if field.nodes() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} nodes", self.len()),
                got: format!("{} nodes", field.nodes()),
            });
        }
        Ok(SpaceTimeField::from_values(
            &self.matrix * field.values(),
            field.dt(),
            super::field::Support::Box,
        ))
    }

    /// `fᵀ A_s g`, i.e. the product of the half powers.
    pub fn pairing(&self, f: &DVector<f64>, g: &DVector<f64>) -> Result<f64> {
        if f.len() != self.len() || g.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} nodes", self.len()),
                got: format!("{} and {} nodes", f.len(), g.len()),
            });
        }
        Ok(f.dot(&(&self.matrix * g)))
    }

    /// Square block of the operator on a node subset.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
            self.matrix[(rows[i], cols[j])]
        })
    }
}
