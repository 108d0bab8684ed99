use nalgebra::DMatrix;

use super::coefficient::Coefficient;
use super::params::TimeGrid;
use crate::error::{Error, Result};
use crate::fracgrid::Grid;

/// Highest τ-derivative precomputed for polynomial-type nonlinearities.
pub const MAX_TAU_ORDER: usize = 8;

/// One term `α(x,t) τ^power` of a polynomial-type nonlinearity.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyTerm {
    pub coeff: Coefficient,
    pub power: u32,
}

/// `Σ_j α_j(x,t) τ^{p_j}`, optionally damped by `exp(-τ^{2K})`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialType {
    terms: Vec<PolyTerm>,
    gaussian: Option<u32>,
    // derivative_polys[j][n] holds P with d^n/dτ^n (τ^p G) = P(τ) G(τ)
    derivative_polys: Vec<Vec<Vec<f64>>>,
}

impl PolynomialType {
    pub fn new(terms: Vec<PolyTerm>, gaussian: Option<u32>) -> Result<Self> {
        if terms.iter().any(|t| t.power == 0) {
            return Err(Error::InvalidParameter(
                "powers must be at least 1 so that g(0) = 0".into(),
            ));
        }
        if gaussian == Some(0) {
            return Err(Error::InvalidParameter(
                "Gaussian exponent must be at least 1".into(),
            ));
        }
        let derivative_polys = terms
            .iter()
            .map(|t| {
                let mut p = vec![0.0; t.power as usize + 1];
                p[t.power as usize] = 1.0;
                let mut out = vec![p.clone()];
                for _ in 0..MAX_TAU_ORDER {
                    p = differentiate_times_gaussian(&p, gaussian);
                    out.push(p.clone());
                }
                out
            })
            .collect();
        Ok(PolynomialType {
            terms,
            gaussian,
            derivative_polys,
        })
    }

    pub fn terms(&self) -> &[PolyTerm] {
        &self.terms
    }

    pub fn gaussian(&self) -> Option<u32> {
        self.gaussian
    }

    fn d_tau_at(&self, order: usize, coeffs: &[f64], tau: f64) -> f64 {
        let damp = self
            .gaussian
            .map_or(1.0, |k| (-tau.powi(2 * k as i32)).exp());
        let sum: f64 = self
            .derivative_polys
            .iter()
            .zip(coeffs)
            .map(|(polys, c)| {
                if *c == 0.0 {
                    0.0
                } else {
                    c * horner(&polys[order], tau)
                }
            })
            .sum();
        sum * damp
    }
}

/// `P ↦ P' - 2K τ^{2K-1} P`, the polynomial factor of `d/dτ (P G)` for `G = exp(-τ^{2K})`.
fn differentiate_times_gaussian(p: &[f64], gaussian: Option<u32>) -> Vec<f64> {
    let mut out: Vec<f64> = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect();
    if let Some(k) = gaussian {
        let shift = 2 * k as usize - 1;
        let len = p.len() + shift;
        out.resize(len.max(out.len()), 0.0);
        for (deg, c) in p.iter().enumerate() {
            out[deg + shift] -= 2.0 * k as f64 * c;
        }
    }
    if out.is_empty() {
        out.push(0.0);
    }
    out
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// `Σ_k α_k(x,t) |τ|^{r_k} τ` with `0 < r_1 < ... < r_L ≤ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyhomogeneous {
    terms: Vec<(Coefficient, f64)>,
}

impl Polyhomogeneous {
    pub fn new(terms: Vec<(Coefficient, f64)>) -> Result<Self> {
        let r: Vec<f64> = terms.iter().map(|t| t.1).collect();
        let ordered = r.windows(2).all(|w| w[0] < w[1]);
        if r.is_empty() || !ordered || r[0] <= 0.0 || *r.last().expect("nonempty") > 1.0 {
            return Err(Error::ExponentOrderViolation(r));
        }
        Ok(Polyhomogeneous { terms })
    }

    pub fn terms(&self) -> &[(Coefficient, f64)] {
        &self.terms
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.1).collect()
    }

    fn d_tau_at(&self, order: usize, coeffs: &[f64], tau: f64) -> f64 {
        self.terms
            .iter()
            .zip(coeffs)
            .map(|((_, r), c)| c * signed_power_derivative(*r, order, tau))
            .sum()
    }
}

/// `d^n/dτ^n [ |τ|^r τ ]`.
pub fn signed_power_derivative(r: f64, order: usize, tau: f64) -> f64 {
    let mut factor = 1.0;
    for j in 0..order {
        factor *= r + 1.0 - j as f64;
    }
    let exponent = r + 1.0 - order as f64;
    let sign = if order.is_multiple_of(2) { tau.signum() } else { 1.0 };
    if tau == 0.0 {
        return if exponent > 0.0 || factor == 0.0 {
            0.0
        } else if exponent == 0.0 {
            if order.is_multiple_of(2) {
                0.0
            } else {
                factor
            }
        } else {
            f64::INFINITY
        };
    }
    factor * tau.abs().powf(exponent) * sign
}

/// The nonlinear term of the equation.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    Zero,
    Polynomial(PolynomialType),
    Polyhomogeneous(Polyhomogeneous),
    /// Pressure form: `∂ₜ²(β u²)` on the right-hand side.
    WesterveltBeta(Coefficient),
    /// Potential form: `∂ₜ(κ (∂ₜu)²)` on the right-hand side.
    WesterveltKappa(Coefficient),
}

impl Nonlinearity {
    /// `a(x) τ^p` with a space-only coefficient.
    pub fn monomial(coeff: Coefficient, power: u32) -> Self {
        Nonlinearity::Polynomial(
            PolynomialType::new(vec![PolyTerm { coeff, power }], None).expect("power >= 1"),
        )
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Nonlinearity::Zero => true,
            Nonlinearity::Polynomial(p) => p.terms.iter().all(|t| t.coeff.is_zero()),
            Nonlinearity::Polyhomogeneous(p) => p.terms.iter().all(|t| t.0.is_zero()),
            Nonlinearity::WesterveltBeta(c) | Nonlinearity::WesterveltKappa(c) => c.is_zero(),
        }
    }

    pub fn is_westervelt(&self) -> bool {
        matches!(
            self,
            Nonlinearity::WesterveltBeta(_) | Nonlinearity::WesterveltKappa(_)
        )
    }

    /// Highest τ-derivative that is available everywhere.
    pub fn max_tau_order(&self) -> usize {
        match self {
            Nonlinearity::Zero => usize::MAX,
            Nonlinearity::Polynomial(_) => MAX_TAU_ORDER,
            Nonlinearity::Polyhomogeneous(_) => 1,
            _ => 0,
        }
    }

    fn coefficients(&self) -> Vec<&Coefficient> {
        match self {
            Nonlinearity::Zero => Vec::new(),
            Nonlinearity::Polynomial(p) => p.terms.iter().map(|t| &t.coeff).collect(),
            Nonlinearity::Polyhomogeneous(p) => p.terms.iter().map(|t| &t.0).collect(),
            Nonlinearity::WesterveltBeta(c) | Nonlinearity::WesterveltKappa(c) => vec![c],
        }
    }

    /// `∂^order_τ g` at one point given the term coefficients there.
    pub fn d_tau_at(&self, order: usize, coeffs: &[f64], tau: f64) -> Result<f64> {
        match self {
            Nonlinearity::Zero => Ok(0.0),
            Nonlinearity::Polynomial(p) => {
                if order > MAX_TAU_ORDER {
                    return Err(Error::DerivativeOrderUnsupported {
                        order,
                        reason: format!("at most {MAX_TAU_ORDER} τ-derivatives are tabulated"),
                    });
                }
                Ok(p.d_tau_at(order, coeffs, tau))
            }
            Nonlinearity::Polyhomogeneous(p) => Ok(p.d_tau_at(order, coeffs, tau)),
            _ => Err(Error::DerivativeOrderUnsupported {
                order,
                reason: "Westervelt terms are not functions of u alone".into(),
            }),
        }
    }

    pub fn eval_at(&self, coeffs: &[f64], tau: f64) -> Result<f64> {
        self.d_tau_at(0, coeffs, tau)
    }

    /// Term coefficients sampled on Ω at step midpoints (`mid`) or time levels.
    pub fn sample(&self, grid: &Grid, time: &TimeGrid, mid: bool) -> SampledNonlinearity<'_> {
        SampledNonlinearity {
            nl: self,
            coeffs: self
                .coefficients()
                .iter()
                .map(|c| c.samples(grid, time, 0, mid))
                .collect(),
        }
    }

    /// Advisory growth checks for polynomial terms: for `2s < n` the largest power `p`
    /// should satisfy `p - 1 ≤ 2s/(n - 2s)`.
    pub fn growth_warnings(&self, n: usize, s: f64) -> Vec<String> {
        let mut out = Vec::new();
        if let Nonlinearity::Polynomial(p) = self {
            let n = n as f64;
            if 2.0 * s < n {
                let limit = 2.0 * s / (n - 2.0 * s);
                for t in &p.terms {
                    let r = t.power as f64 - 1.0;
                    if r > limit {
                        out.push(format!(
                            "power {} exceeds the growth bound r <= {limit:.3} for n = {n}, s = {s}",
                            t.power
                        ));
                    }
                }
            }
        }
        out
    }
}

/// A nonlinearity together with its coefficient samples on a time grid.
pub struct SampledNonlinearity<'a> {
    nl: &'a Nonlinearity,
    coeffs: Vec<DMatrix<f64>>,
}

impl SampledNonlinearity<'_> {
    /// `∂^order_τ g(x_i, t_n, tau)` where `(i, n)` index Ω nodes and sample times.
    pub fn d_tau(&self, order: usize, i: usize, n: usize, tau: f64) -> Result<f64> {
        let mut buf = [0.0; 8];
        let k = self.coeffs.len();
        if k <= buf.len() {
            for (slot, c) in buf.iter_mut().zip(&self.coeffs) {
                *slot = c[(i, n)];
            }
            self.nl.d_tau_at(order, &buf[..k], tau)
        } else {
            let v: Vec<f64> = self.coeffs.iter().map(|c| c[(i, n)]).collect();
            self.nl.d_tau_at(order, &v, tau)
        }
    }

    /// Applies `∂^order_τ g` to a matrix of values laid out like the samples.
    pub fn apply(&self, order: usize, values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(values.nrows(), values.ncols());
        for n in 0..values.ncols() {
            for i in 0..values.nrows() {
                out[(i, n)] = self.d_tau(order, i, n, values[(i, n)])?;
            }
        }
        Ok(out)
    }
}
