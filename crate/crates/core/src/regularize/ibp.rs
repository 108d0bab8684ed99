use nalgebra::DMatrix;

use crate::dnmap::IdentityCheck;
use crate::error::Result;
use crate::forward::{solve_backward_adjoint, solve_linear_mgt, ExteriorInput, Forcing, Model, Potential, Scheme};
use crate::fracgrid::{trapezoid_weights, SpaceTimeField};

/// `∫⟨∂ₜ³u, v⟩` against `-∫⟨u, ∂ₜ³v⟩` for `u` solving the forward problem with `(q₁, F)` and
/// `v` the backward problem with `(q₂, G)`; third derivatives come from the equations.
pub fn ibp_residual(
    model: &Model,
    q1: &Potential,
    q2: &Potential,
    f: Option<&SpaceTimeField>,
    g: Option<&SpaceTimeField>,
    scheme: Scheme,
) -> Result<IdentityCheck> {
    let (grid, time) = (model.grid(), model.time());
    let omega = grid.omega();
    let forcing = f.map_or(Forcing::None, Forcing::Field);
    let u = solve_linear_mgt(model, q1, forcing, &ExteriorInput::zero(), scheme)?.to_compact(model);
    let v = solve_backward_adjoint(model, q2, g, scheme)?.to_compact(model);
    let p = model.params();
    let a = model.a_omega();
    let rows = |x: Option<&SpaceTimeField>| x.map_or_else(|| DMatrix::zeros(omega.len(), time.steps + 1), |x| x.rows(omega));
    let (fr, gr) = (rows(f), rows(g));
    let q1s = q1.coeff().samples(grid, time, 0, false);
    let q2s = q2.coeff().samples(grid, time, 0, false);

    // forward: ∂ₜ³u = F - α∂ₜ²u - bA∂ₜu - (cA + q₁)u; backward: ∂ₜ³v = G + α∂ₜ²v - bA∂ₜv + (cA + q₂)v
    let u3 = &fr - &u.a * p.alpha - a * (&u.v * p.b + &u.u * p.c) - q1s.component_mul(&u.u);
    let v3 = &gr + &v.a * p.alpha - a * (&v.v * p.b - &v.u * p.c) + q2s.component_mul(&v.u);
    let w = trapezoid_weights(time.steps, time.dt);
    let cell = grid.cell();
    let pair = |x: &DMatrix<f64>, y: &DMatrix<f64>| -> f64 {
        w.iter().enumerate().map(|(n, wn)| wn * x.column(n).dot(&y.column(n))).sum::<f64>() * cell
    };
    Ok(IdentityCheck::new(pair(&u3, &v.u), -pair(&u.u, &v3)))
}
