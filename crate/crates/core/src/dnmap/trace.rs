use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::forward::{ExteriorInput, Model, StateTrajectory};
use crate::fracgrid::{trapezoid_weights, SpaceTimeField, Support};

/// Exterior data `b A_s ∂ₜu + c A_s u` of a solution.
#[derive(Clone, Debug)]
pub struct DnTrace {
    /// The flux restricted to Ω_e.
    pub trace: SpaceTimeField,
    /// The flux on the whole box.
    pub flux: SpaceTimeField,
}

impl DnTrace {
    /// Rows of the trace on a node subset (typically a measurement window).
    pub fn window(&self, nodes: &[usize]) -> DMatrix<f64> {
        self.trace.rows(nodes)
    }
}

/// Flux `b A_s ∂ₜu + c A_s u` of the full solution, with `∂ₜu` taken from the stored triple.
pub fn dn_trace(model: &Model, traj: &StateTrajectory) -> DnTrace {
    let p = model.params();
    let u = traj.full_field(model, 0);
    let ut = traj.full_field(model, 1);
    let combo = ut.values() * p.b + u.values() * p.c;
    let flux =
        SpaceTimeField::from_values(model.op().matrix() * combo, model.time().dt, Support::Box);
    let trace = flux.restricted(model.grid().omega_e(), Support::Exterior);
    DnTrace { trace, flux }
}

/// `⟨Λφ, ρ⟩ = ∫₀ᵀ ⟨A^{s/2}(b∂ₜu + cu), A^{s/2}ρ⟩ dt` with trapezoid weights and cell measure.
pub fn dn_pairing(model: &Model, traj: &StateTrajectory, rho: &SpaceTimeField) -> Result<f64> {
    let grid = model.grid();
    if rho.nodes() != grid.len() || rho.steps() != model.time().steps {
        return Err(Error::ShapeMismatch {
            expected: format!("{} x {}", grid.len(), model.time().steps + 1),
            got: format!("{} x {}", rho.nodes(), rho.steps() + 1),
        });
    }
    if grid
        .omega()
        .iter()
        .any(|&i| rho.values().row(i).iter().any(|&v| v != 0.0))
    {
        return Err(Error::Support("test field touches Ω".into()));
    }
    let p = model.params();
    let weights = trapezoid_weights(model.time().steps, model.time().dt);
    let op = model.op();
    let mut acc = 0.0;
    for (n, w) in weights.iter().enumerate() {
        let rn = rho.column(n);
        if rn.iter().all(|&v| v == 0.0) {
            continue;
        }
        let f = traj.full(model, n, 1) * p.b + traj.full(model, n, 0) * p.c;
        acc += w * op.pairing(&f, &rn)?;
    }
    Ok(acc * grid.cell())
}

/// Test field `ρ⋆` at the time levels, i.e. the time-reversed exterior datum.
pub fn reversed_test_field(model: &Model, rho: &ExteriorInput) -> SpaceTimeField {
    rho.time_reversed(model.time().final_time())
        .field(model.grid(), model.time(), 0)
}
