
use super::exterior::ExteriorInput;
use super::model::{total_drive, Forcing, Model, Potential, SolveInfo, StateTrajectory};
use super::params::Scheme;
use super::stepper::{PotentialSamples, Stepper};
use crate::error::Result;
use crate::fracgrid::SpaceTimeField;

/// Linear problem with potential `q`, interior source `F` and exterior datum `φ`.
pub fn solve_linear_mgt(
    model: &Model,
    q: &Potential,
    forcing: Forcing<'_>,
    phi: &ExteriorInput,
    scheme: Scheme,
) -> Result<StateTrajectory> {
    solve_with_reg(model, q, forcing, phi, scheme, 0.0)
}

pub(crate) fn solve_with_reg(
    model: &Model,
    q: &Potential,
    forcing: Forcing<'_>,
    phi: &ExteriorInput,
    scheme: Scheme,
    reg: f64,
) -> Result<StateTrajectory> {
    phi.validate_support(model.grid())?;
    let (mid, nodes) = total_drive(model, forcing, phi, reg);
    let stepper = Stepper::new(
        model,
        reg,
        PotentialSamples::from_potential(model, q),
        scheme,
    );
    let c = stepper.run(&mid, &nodes)?;
    let info = SolveInfo {
        scheme,
        iterations: 1,
        contraction_ratios: Vec::new(),
        regularization: reg,
    };
    Ok(StateTrajectory::from_compact(model, &c, phi.clone(), info))
}

/// Backward problem `(∂ₜ³ - α∂ₜ² + bA∂ₜ - cA - q)w = G` with `w = ∂ₜw = ∂ₜ²w = 0` at `t = T`.
///
/// Solved through `w = v⋆` where `v` solves the forward problem with `q⋆` and source `-G⋆`.
/// The stored triple is `(w, ∂ₜw, ∂ₜ²w)`.
pub fn solve_backward_adjoint(
    model: &Model,
    q: &Potential,
    g: Option<&SpaceTimeField>,
    scheme: Scheme,
) -> Result<StateTrajectory> {
    let time = model.time();
    let q_rev = q.time_reversed(model.grid(), time);
    let source = g.map(|g| g.time_reversed().scaled(-1.0));
    let forcing = source.as_ref().map_or(Forcing::None, Forcing::Field);
    let v = solve_linear_mgt(model, &q_rev, forcing, &ExteriorInput::zero(), scheme)?;
    Ok(StateTrajectory {
        u: v.u.time_reversed(),
        ut: v.ut.time_reversed().scaled(-1.0),
        utt: v.utt.time_reversed(),
        phi: ExteriorInput::zero(),
        info: v.info,
    })
}
