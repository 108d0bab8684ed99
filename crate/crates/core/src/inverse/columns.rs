use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::oracle::{window_trace, DnOracle};
use crate::error::{Error, Result};
use crate::forward::stepper::{PotentialSamples, Stepper};
use crate::forward::{Coefficient, ExteriorInput, Model, Potential, Scheme, SolveInfo, StateTrajectory};
use crate::fracgrid::SpaceTimeField;

/// Offsets (in units of η) and weights of the central `order`-th difference.
pub(crate) fn central_stencil(order: usize, eta: f64) -> Vec<(f64, f64)> {
    let denom = (2.0 * eta).powi(order as i32);
    let mut binom = 1.0;
    (0..=order)
        .map(|k| {
            let w = if k % 2 == 0 { binom } else { -binom };
            let off = (order as f64 - 2.0 * k as f64) * eta;
            binom = binom * (order - k) as f64 / (k + 1) as f64;
            (off, w / denom)
        })
        .collect()
}

/// Central `order`-th ε-quotient of measured traces along the datum `psi`.
pub(crate) fn quotient_trace(oracle: &dyn DnOracle, psi: &ExteriorInput, order: usize, eta: f64) -> Result<DVector<f64>> {
    let st = central_stencil(order, eta);
    let traces = st
        .par_iter()
        .filter(|(_, w)| *w != 0.0)
        .map(|(off, w)| Ok(oracle.trace(&psi.scaled(*off))? * *w))
        .collect::<Result<Vec<_>>>()?;
    traces.into_iter().reduce(|a, b| a + b).ok_or(Error::EmptyBank)
}

/// Window traces of `L_q⁻¹ s` for midpoint sources `s` (Ω rows × steps).
pub(crate) fn source_trace_columns(model: &Model, q: &Potential, sources: &[DMatrix<f64>], window: &[usize]) -> Result<DMatrix<f64>> {
    let stepper = Stepper::new(model, 0.0, PotentialSamples::from_potential(model, q), Scheme::ImplicitMidpoint);
    let nodes = DMatrix::zeros(model.m(), model.time().steps + 1);
    let cols = sources
        .par_iter()
        .map(|s| {
            let c = stepper.run(s, &nodes)?;
            let traj = StateTrajectory::from_compact(model, &c, ExteriorInput::zero(), SolveInfo::default());
            Ok(window_trace(model, &traj, window))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Ω rows of a field averaged onto step midpoints.
pub(crate) fn midpoint_rows(model: &Model, f: &SpaceTimeField) -> DMatrix<f64> {
    let c = f.rows(model.grid().omega());
    DMatrix::from_fn(c.nrows(), c.ncols() - 1, |i, n| 0.5 * (c[(i, n)] + c[(i, n + 1)]))
}

/// `e_p · weight` on Ω for each basis function.
pub(crate) fn weighted_sources(model: &Model, basis: &[Vec<f64>], weight: &DMatrix<f64>, scale: f64) -> Vec<DMatrix<f64>> {
    let omega = model.grid().omega();
    basis
        .iter()
        .map(|b| DMatrix::from_fn(weight.nrows(), weight.ncols(), |i, n| scale * b[omega[i]] * weight[(i, n)]))
        .collect()
}

/// Fails when the `root`-th root of `|divisor|` peaks below `floor` times its maximum on some inner node.
pub(crate) fn check_divisor(model: &Model, divisor: &DMatrix<f64>, inner: &[usize], floor: f64, root: usize) -> Result<f64> {
    let omega = model.grid().omega();
    let peaks: Vec<f64> = (0..divisor.nrows()).map(|i| divisor.row(i).amax().powf(1.0 / root as f64)).collect();
    let top = peaks.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let worst = omega
        .iter()
        .zip(&peaks)
        .filter(|(node, _)| inner.contains(node))
        .map(|(_, p)| p / top)
        .fold(f64::INFINITY, f64::min);
    if !(worst >= floor) {
        return Err(Error::SmallDivisor(format!("divisor floor {worst:.3e} below {floor:.1e}")));
    }
    Ok(worst)
}

/// Coefficient at `t = 0` on the box, zero off Ω.
pub(crate) fn coefficient_profile(model: &Model, c: &Coefficient) -> Vec<f64> {
    let grid = model.grid();
    let s = c.samples(grid, model.time(), 0, false);
    let mut out = vec![0.0; grid.len()];
    for (i, &node) in grid.omega().iter().enumerate() {
        out[node] = s[(i, 0)];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_stencil_differentiates_monomials() {
        for order in 1..=4 {
            let st = central_stencil(order, 0.1);
            for p in 0..=order + 1 {
                let d: f64 = st.iter().map(|(x, w)| w * x.powi(p as i32)).sum();
                let expect = if p == order { (1..=order).product::<usize>() as f64 } else if p < order { 0.0 } else { d };
                assert!((d - expect).abs() < 1e-9, "{order} {p} {d}");
            }
        }
    }
}
