use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{solve_with_reg, ExteriorInput, Forcing, Model, Potential, Scheme, StateTrajectory};
use crate::fracgrid::trapezoid_weights;

/// `(∂ₜ³ + εA∂ₜ² + α∂ₜ² + bA∂ₜ + cA + q)u = F`; `eps = 0` is the unregularized solver.
pub fn solve_regularized(
    model: &Model,
    q: &Potential,
    forcing: Forcing<'_>,
    phi: &ExteriorInput,
    eps: f64,
    scheme: Scheme,
) -> Result<StateTrajectory> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("regularization must be finite and non-negative, got {eps}")));
    }
    solve_with_reg(model, q, forcing, phi, scheme, eps)
}

/// `{1e-1, 1e-2, …, 1e-5}`.
pub fn default_ladder() -> Vec<f64> {
    (1..=5).map(|k| 10f64.powi(-k)).collect()
}

/// Deviations of one regularized run from the `ε = 0` reference.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    /// `‖u_ε - u‖` in `L∞(0,T; L²(Ω))`.
    pub dev_u: f64,
    pub dev_ut: f64,
    pub dev_utt: f64,
    /// `‖∂ₜ³u_ε - ∂ₜ³u‖` in `L²(0,T; H⁻ˢ)`, with `H⁻ˢ` measured through `A^{-1}` on Ω.
    pub dev_uttt: f64,
    /// `ε^{1/2} ‖A^{s/2} ∂ₜ²u_ε‖` in `L²(0,T; L²)`.
    pub weighted_dissipation: f64,
    /// `‖A^{s/2} ∂ₜ²u_ε‖ / ‖A^{s/2} ∂ₜ²u‖`, the ladder-uniform constant of the dissipation bound.
    pub dissipation_ratio: f64,
}

pub struct RegularizationLadder {
    pub rows: Vec<SweepRow>,
    pub trajectories: Vec<StateTrajectory>,
    pub reference: StateTrajectory,
}

impl RegularizationLadder {
    /// `eps,dev_u,dev_ut,dev_utt,weighted_dissipation`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,dev_u,dev_ut,dev_utt,weighted_dissipation\n");
        for r in &self.rows {
            s.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", r.eps, r.dev_u, r.dev_ut, r.dev_utt, r.weighted_dissipation));
        }
        s
    }

    /// Whether every deviation column strictly decreases down the ladder.
    pub fn deviations_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].dev_u < w[0].dev_u && w[1].dev_ut < w[0].dev_ut && w[1].dev_utt < w[0].dev_utt
        })
    }

    /// Largest `|ratio - 1|` over the positive rungs.
    pub fn dissipation_spread(&self) -> f64 {
        self.rows.iter().filter(|r| r.eps > 0.0).map(|r| (r.dissipation_ratio - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn linf_l2(model: &Model, x: &DMatrix<f64>) -> f64 {
    let cell = model.grid().cell();
    x.column_iter().map(|c| (cell * c.norm_squared()).sqrt()).fold(0.0, f64::max)
}

/// Midpoint increments of `∂ₜ²u` over `dt`, measured in `L²(0,T; A^{-1/2})`.
fn weak_jerk_norm(model: &Model, inv_a: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let cell = model.grid().cell();
    let dt = model.time().dt;
    x.column_iter()
        .zip(x.column_iter().skip(1))
        .map(|(lo, hi)| {
            let d = (hi - lo) / dt;
            dt * cell * d.dot(&(inv_a * &d))
        })
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

/// `‖A^{s/2} x‖` in `L²(0,T; L²)` for Ω-supported columns.
fn energy_norm(model: &Model, x: &DMatrix<f64>) -> f64 {
    let cell = model.grid().cell();
    let w = trapezoid_weights(model.time().steps, model.time().dt);
    let a = model.a_omega();
    x.column_iter().zip(&w).map(|(c, wn)| wn * cell * c.dot(&(a * c))).sum::<f64>().max(0.0).sqrt()
}

/// Solves every rung in parallel and tabulates deviations from the `ε = 0` run.
///
/// The ladder must be strictly decreasing; a trailing zero yields the reference row.
pub fn regularization_sweep(
    model: &Model,
    q: &Potential,
    forcing: Forcing<'_>,
    phi: &ExteriorInput,
    ladder: &[f64],
    scheme: Scheme,
) -> Result<RegularizationLadder> {
    if ladder.is_empty() || ladder.windows(2).any(|w| !(w[1] < w[0])) || ladder.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::InvalidParameter("the ε-ladder must be non-negative and strictly decreasing".into()));
    }
    let reference = solve_regularized(model, q, forcing, phi, 0.0, scheme)?;
    let trajectories =
        ladder.par_iter().map(|&e| solve_regularized(model, q, forcing, phi, e, scheme)).collect::<Result<Vec<_>>>()?;
    let r = reference.to_compact(model);
    let base = energy_norm(model, &r.a);
    let inv_a = model
        .a_omega()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("the operator block on Ω is not positive definite".into()))?
        .inverse();
    let rows = ladder
        .iter()
        .zip(&trajectories)
        .map(|(&eps, t)| {
            let c = t.to_compact(model);
            let e = energy_norm(model, &c.a);
            SweepRow {
                eps,
                dev_u: linf_l2(model, &(&c.u - &r.u)),
                dev_ut: linf_l2(model, &(&c.v - &r.v)),
                dev_utt: linf_l2(model, &(&c.a - &r.a)),
                dev_uttt: weak_jerk_norm(model, &inv_a, &(&c.a - &r.a)),
                weighted_dissipation: eps.sqrt() * e,
                dissipation_ratio: e / base.max(f64::MIN_POSITIVE),
            }
        })
        .collect();
    Ok(RegularizationLadder { rows, trajectories, reference })
}
