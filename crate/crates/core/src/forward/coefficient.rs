use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::params::TimeGrid;
use crate::fracgrid::{Grid, SpaceTimeField};

/// A space-time coefficient on Ω such as a potential amplitude or a nonlinearity weight.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// `profile(x) · Σ_k poly[k] t^k` with `profile` given per box node.
    Separable {
        profile: Vec<f64>,
        poly: Vec<f64>,
    },
    /// Node samples; time derivatives by finite differences.
    Sampled(SpaceTimeField),
}

/// Serializable description of a spatial profile on Ω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `amplitude · exp(-|x - center|² / (2 width²))`.
    Gaussian {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
    },
    /// `amplitude · exp(1 - 1/(1 - |x - center|²/radius²))` inside the ball.
    Bump {
        amplitude: f64,
        center: Vec<f64>,
        radius: f64,
    },
}

impl Profile {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            Profile::Bump {
                amplitude,
                center,
                radius,
            } => {
                let r2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - c).powi(2))
                    .sum::<f64>()
                    / (radius * radius);
                if r2 < 1.0 {
                    amplitude * (1.0 - 1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Values at every box node, zero off Ω.
    pub fn on_omega(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.len())
            .map(|i| {
                if grid.in_omega(i) {
                    self.eval(&grid.coords(i))
                } else {
                    0.0
                }
            })
            .collect()
    }
}

impl Coefficient {
    pub fn separable(grid: &Grid, profile: &Profile, poly: Vec<f64>) -> Self {
        Coefficient::Separable {
            profile: profile.on_omega(grid),
            poly,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Constant(c) => *c == 0.0,
            Coefficient::Separable { profile, poly } => {
                profile.iter().all(|&p| p == 0.0) || poly.iter().all(|&p| p == 0.0)
            }
            Coefficient::Sampled(f) => f.values().iter().all(|&v| v == 0.0),
        }
    }

    /// Whether the coefficient does not depend on time.
    pub fn is_static(&self) -> bool {
        match self {
            Coefficient::Constant(_) => true,
            Coefficient::Separable { poly, .. } => poly.iter().skip(1).all(|&p| p == 0.0),
            Coefficient::Sampled(f) => {
                let v = f.values();
                (1..v.ncols()).all(|n| v.column(n) == v.column(0))
            }
        }
    }

    /// Samples of the `order`-th time derivative at the nodes of Ω (rows) and the
    /// requested times; `mid` selects step midpoints instead of time levels.
    pub fn samples(&self, grid: &Grid, time: &TimeGrid, order: usize, mid: bool) -> DMatrix<f64> {
        let omega = grid.omega();
        let cols = if mid { time.steps } else { time.steps + 1 };
        let t_of = |n: usize| if mid { time.t_mid(n) } else { time.t(n) };
        match self {
            Coefficient::Constant(c) => {
                let v = if order == 0 { *c } else { 0.0 };
                DMatrix::from_element(omega.len(), cols, v)
            }
            Coefficient::Separable { profile, poly } => {
                let d = poly_derivative(poly, order);
                DMatrix::from_fn(omega.len(), cols, |i, n| {
                    profile[omega[i]] * poly_eval(&d, t_of(n))
                })
            }
            Coefficient::Sampled(f) => {
                let nodal = fd_time_derivative(&f.rows(omega), time.dt, order);
                if mid {
                    DMatrix::from_fn(omega.len(), cols, |i, n| {
                        0.5 * (nodal[(i, n)] + nodal[(i, n + 1)])
                    })
                } else {
                    nodal
                }
            }
        }
    }

    /// Node field on the box (support Ω).
    pub fn to_field(&self, grid: &Grid, time: &TimeGrid) -> SpaceTimeField {
        let s = self.samples(grid, time, 0, false);
        let mut values = DMatrix::zeros(grid.len(), time.steps + 1);
        for (i, &node) in grid.omega().iter().enumerate() {
            values.set_row(node, &s.row(i));
        }
        SpaceTimeField::from_values(values, time.dt, crate::fracgrid::Support::Omega)
    }
}

fn poly_derivative(p: &[f64], order: usize) -> Vec<f64> {
    let mut d = p.to_vec();
    for _ in 0..order {
        d = d
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect();
    }
    d
}

fn poly_eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Centered differences in time with one-sided second-order ends, applied `order` times.
fn fd_time_derivative(values: &DMatrix<f64>, dt: f64, order: usize) -> DMatrix<f64> {
    let mut out = values.clone();
    for _ in 0..order {
        let m = out.ncols();
        let prev = out.clone();
        out = DMatrix::from_fn(prev.nrows(), m, |i, n| {
            if m < 3 {
                return if m == 2 {
                    (prev[(i, 1)] - prev[(i, 0)]) / dt
                } else {
                    0.0
                };
            }
            if n == 0 {
                (-3.0 * prev[(i, 0)] + 4.0 * prev[(i, 1)] - prev[(i, 2)]) / (2.0 * dt)
            } else if n == m - 1 {
                (3.0 * prev[(i, m - 1)] - 4.0 * prev[(i, m - 2)] + prev[(i, m - 3)]) / (2.0 * dt)
            } else {
                (prev[(i, n + 1)] - prev[(i, n - 1)]) / (2.0 * dt)
            }
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracgrid::Support;

    #[test]
    fn separable_derivatives_are_analytic() {
        let g = Grid::interval(2.0, 15, 2).unwrap();
        let time = TimeGrid::new(1.0, 0.1).unwrap();
        let c = Coefficient::separable(&g, &Profile::Constant { value: 2.0 }, vec![1.0, 0.0, 3.0]);
        let d2 = c.samples(&g, &time, 2, true);
        assert!(d2.iter().all(|&v| (v - 12.0).abs() < 1e-12));
        let d1 = c.samples(&g, &time, 1, false);
        assert!((d1[(0, 10)] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_quadratic_derivative_is_exact() {
        let g = Grid::interval(2.0, 15, 2).unwrap();
        let time = TimeGrid::new(1.0, 0.05).unwrap();
        let f = SpaceTimeField::from_fn(&g, time.steps, time.dt, Support::Omega, |_, t| t * t);
        let d = Coefficient::Sampled(f).samples(&g, &time, 1, false);
        for n in 0..=time.steps {
            assert!((d[(0, n)] - 2.0 * time.t(n)).abs() < 1e-10);
        }
    }
}
