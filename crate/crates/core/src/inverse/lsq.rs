use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition number above which a regularized system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// How the Tikhonov weight is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularization {
    /// `λ = factor · σ_max²`.
    Relative { factor: f64 },
    /// Fixed `λ`.
    Absolute { lambda: f64 },
    /// Largest `λ` with `‖Ax - b‖ ≤ tau · delta` (Morozov).
    Discrepancy { delta: f64, tau: f64 },
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::Relative { factor: 1e-8 }
    }
}

/// Solution of `min ‖Ax - b‖² + λ‖x‖²`.
#[derive(Clone, Debug, Serialize)]
pub struct LsqSolution {
    pub x: DVector<f64>,
    pub lambda: f64,
    pub singular_values: Vec<f64>,
    /// `σ_max / σ_min` of `A`.
    pub condition: f64,
    /// `√((σ_max² + λ)/(σ_min² + λ))`.
    pub regularized_condition: f64,
    pub residual: f64,
}

/// SVD factors reused across several weights.
pub struct Tikhonov {
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    v_t: DMatrix<f64>,
}

impl Tikhonov {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if a.ncols() == 0 || a.nrows() == 0 {
            return Err(Error::EmptyBank);
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite entries in the assembled map".into()));
        }
        let svd = a.clone().svd(true, true);
        Ok(Tikhonov {
            u: svd.u.expect("requested"),
            sigma: svd.singular_values,
            v_t: svd.v_t.expect("requested"),
        })
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma.max()
    }

    /// `σ_min` over all columns; zero when `A` has fewer rows than columns.
    fn sigma_min(&self, cols: usize) -> f64 {
        if self.sigma.len() < cols {
            0.0
        } else {
            self.sigma.min()
        }
    }

    fn filtered(&self, b: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let beta = self.u.transpose() * b;
        let coef = DVector::from_iterator(
            self.sigma.len(),
            self.sigma.iter().zip(beta.iter()).map(|(s, bi)| {
                let d = s * s + lambda;
                if d > 0.0 {
                    s * bi / d
                } else {
                    0.0
                }
            }),
        );
        self.v_t.transpose() * coef
    }

    pub fn solve(&self, a: &DMatrix<f64>, b: &DVector<f64>, reg: Regularization) -> Result<LsqSolution> {
        let smax = self.sigma_max();
        let lambda = match reg {
            Regularization::Relative { factor } => factor * smax * smax,
            Regularization::Absolute { lambda } => lambda,
            Regularization::Discrepancy { delta, tau } => self.discrepancy_lambda(a, b, tau * delta),
        };
        if !(lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative Tikhonov weight {lambda}")));
        }
        let x = self.filtered(b, lambda);
        let smin = self.sigma_min(a.ncols());
        let regularized_condition = ((smax * smax + lambda) / (smin * smin + lambda)).sqrt();
        if !regularized_condition.is_finite() || regularized_condition > MAX_CONDITION {
            return Err(Error::IllConditioned(regularized_condition));
        }
        let residual = (a * &x - b).norm();
        Ok(LsqSolution {
            x,
            lambda,
            singular_values: self.sigma.iter().copied().collect(),
            condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
            regularized_condition,
            residual,
        })
    }

    /// Bisection in `log λ` for the discrepancy level `target`.
    fn discrepancy_lambda(&self, a: &DMatrix<f64>, b: &DVector<f64>, target: f64) -> f64 {
        let smax = self.sigma_max();
        let res = |l: f64| (a * self.filtered(b, l) - b).norm();
        let (mut lo, mut hi) = ((smax * smax * 1e-16).ln(), (smax * smax * 1e4).ln());
        if res(lo.exp()) >= target {
            return lo.exp();
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if res(mid.exp()) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo.exp()
    }
}

/// One-shot Tikhonov solve.
pub fn tikhonov(a: &DMatrix<f64>, b: &DVector<f64>, reg: Regularization) -> Result<LsqSolution> {
    Tikhonov::new(a)?.solve(a, b, reg)
}
