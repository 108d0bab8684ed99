use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::operator::FracOp;

#[derive(Clone, Debug, Serialize)]
pub struct OperatorLaw {
    pub s: f64,
    /// Frobenius norm of `A - Aᵀ`.
    pub symmetry_residual: f64,
    /// Smallest sampled Rayleigh quotient `uᵀAu / uᵀu`.
    pub min_rayleigh: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupLaw {
    pub s1: f64,
    pub s2: f64,
    /// Frobenius norm of `A_{s1} A_{s2} - A_{s1+s2}` divided by the norm of `A_{s1+s2}`.
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PoincareLaw {
    pub t: f64,
    pub s: f64,
    /// `λ_min^{(t-s)/2}`.
    pub bound: f64,
    /// Largest sampled `‖A^{t/2}u‖ / ‖A^{s/2}u‖`.
    pub max_ratio: f64,
}

impl PoincareLaw {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.max_ratio <= self.bound * (1.0 + rel_tol)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LawReport {
    pub operators: Vec<OperatorLaw>,
    pub semigroup: Vec<SemigroupLaw>,
    pub poincare: Vec<PoincareLaw>,
}

impl LawReport {
    pub fn max_symmetry_residual(&self) -> f64 {
        self.operators
            .iter()
            .map(|o| o.symmetry_residual)
            .fold(0.0, f64::max)
    }

    pub fn min_rayleigh(&self) -> f64 {
        self.operators
            .iter()
            .map(|o| o.min_rayleigh)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_semigroup_residual(&self) -> f64 {
        self.semigroup
            .iter()
            .map(|o| o.residual)
            .fold(0.0, f64::max)
    }
}

/// Symmetry, positivity, semigroup and Poincaré checks for operators built on one grid.
pub fn check_operator_laws(ops: &[FracOp], samples: usize, seed: u64) -> LawReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = ops.first().map_or(0, |op| op.len());
    let vectors: Vec<DVector<f64>> = (0..samples)
        .map(|_| DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)))
        .collect();

    let operators = ops
        .iter()
        .map(|op| {
            let a = op.matrix();
            let min_rayleigh = vectors
                .iter()
                .map(|u| u.dot(&(a * u)) / u.norm_squared())
                .fold(f64::INFINITY, f64::min);
            OperatorLaw {
                s: op.s(),
                symmetry_residual: (a - a.transpose()).norm(),
                min_rayleigh,
            }
        })
        .collect();

    let mut semigroup = Vec::new();
    for (i, a) in ops.iter().enumerate() {
        for b in &ops[i..] {
            let sum = a
                .with_exponent(a.s() + b.s())
                .expect("sum of valid exponents");
            let diff = a.matrix() * b.matrix() - sum.matrix();
            semigroup.push(SemigroupLaw {
                s1: a.s(),
                s2: b.s(),
                residual: diff.norm() / sum.matrix().norm().max(f64::MIN_POSITIVE),
            });
        }
    }

    let mut poincare = Vec::new();
    for low in ops {
        for high in ops {
            if low.s() > high.s() {
                continue;
            }
            let lambda_min = low.eigvals()[0];
            let bound = lambda_min.powf((low.s() - high.s()) / 2.0);
            let max_ratio = vectors
                .iter()
                .map(|u| {
                    let num = u.dot(&(low.matrix() * u)).max(0.0).sqrt();
                    let den = u.dot(&(high.matrix() * u)).max(0.0).sqrt();
                    num / den
                })
                .fold(0.0, f64::max);
            poincare.push(PoincareLaw {
                t: low.s(),
                s: high.s(),
                bound,
                max_ratio,
            });
        }
    }

    LawReport {
        operators,
        semigroup,
        poincare,
    }
}
