use serde::{Deserialize, Serialize};

use crate::fracgrid::Grid;

/// Finite-dimensional space for recovered spatial coefficients on Ω.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpatialBasis {
    /// One indicator per Ω node.
    #[default]
    Nodal,
    /// The indicator of Ω.
    Constant,
    /// `cos(kπξ)`, `k < modes`, along the first axis with `ξ ∈ [0, 1]` across Ω.
    Cosine { modes: usize },
}

impl SpatialBasis {
    /// Basis functions sampled on the box, zero off Ω.
    pub fn functions(&self, grid: &Grid) -> Vec<Vec<f64>> {
        let len = grid.len();
        match self {
            SpatialBasis::Nodal => grid
                .omega()
                .iter()
                .map(|&i| {
                    let mut e = vec![0.0; len];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            SpatialBasis::Constant => {
                vec![(0..len).map(|i| if grid.in_omega(i) { 1.0 } else { 0.0 }).collect()]
            }
            SpatialBasis::Cosine { modes } => {
                let (lo, hi) = grid.omega_bounds();
                (0..*modes)
                    .map(|k| {
                        (0..len)
                            .map(|i| {
                                if !grid.in_omega(i) {
                                    return 0.0;
                                }
                                let xi = (grid.coords(i)[0] - lo[0]) / (hi[0] - lo[0]);
                                (std::f64::consts::PI * k as f64 * xi).cos()
                            })
                            .collect()
                    })
                    .collect()
            }
        }
    }

    pub fn dim(&self, grid: &Grid) -> usize {
        match self {
            SpatialBasis::Nodal => grid.omega().len(),
            SpatialBasis::Constant => 1,
            SpatialBasis::Cosine { modes } => *modes,
        }
    }

    /// `Σ c_k e_k` on the box.
    pub fn synthesize(&self, grid: &Grid, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; grid.len()];
        for (f, c) in self.functions(grid).iter().zip(coeffs) {
            for (o, v) in out.iter_mut().zip(f) {
                *o += c * v;
            }
        }
        out
    }
}

/// Smooth cutoff equal to one on the inner 80% of Ω and vanishing on ∂Ω.
pub fn mollified_indicator(grid: &Grid) -> Vec<f64> {
    let (lo, hi) = grid.omega_bounds();
    (0..grid.len())
        .map(|i| {
            if !grid.in_omega(i) {
                return 0.0;
            }
            let x = grid.coords(i);
            (0..x.len())
                .map(|a| {
                    let r = 0.5 * (hi[a] - lo[a]);
                    let c = 0.5 * (hi[a] + lo[a]);
                    let depth = (1.0 - (x[a] - c).abs() / r) / 0.2;
                    smoothstep(depth)
                })
                .product()
        })
        .collect()
}

/// Ω nodes where [`mollified_indicator`] equals one.
pub fn inner_nodes(grid: &Grid) -> Vec<usize> {
    let chi = mollified_indicator(grid);
    grid.omega().iter().copied().filter(|&i| chi[i] >= 1.0).collect()
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    (x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)).min(1.0)
}

/// Relative discrete L² distance on Ω; absolute when `truth` vanishes there.
pub fn relative_l2_error(grid: &Grid, recovered: &[f64], truth: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &i in grid.omega() {
        num += (recovered[i] - truth[i]).powi(2);
        den += truth[i].powi(2);
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        (num * grid.cell()).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_shape() {
        let g = Grid::interval(2.0, 63, 5).unwrap();
        let chi = mollified_indicator(&g);
        let inner = inner_nodes(&g);
        assert!(!inner.is_empty() && inner.len() < g.omega().len());
        for &i in g.omega() {
            let x = g.coords(i)[0];
            if x.abs() <= 0.8 {
                assert!(chi[i] >= 0.9);
            }
            assert!((0.0..=1.0).contains(&chi[i]));
        }
        assert!(chi.iter().enumerate().all(|(i, &c)| g.in_omega(i) || c == 0.0));
    }

    #[test]
    fn synthesis_matches_functions() {
        let g = Grid::interval(2.0, 31, 5).unwrap();
        for b in [SpatialBasis::Nodal, SpatialBasis::Constant, SpatialBasis::Cosine { modes: 3 }] {
            let fs = b.functions(&g);
            assert_eq!(fs.len(), b.dim(&g));
            let c: Vec<f64> = (0..fs.len()).map(|k| k as f64 + 1.0).collect();
            let s = b.synthesize(&g, &c);
            let direct: f64 = fs.iter().zip(&c).map(|(f, c)| c * f[g.omega()[0]]).sum();
            assert!((s[g.omega()[0]] - direct).abs() < 1e-14);
        }
    }
}
