use serde::Serialize;

use super::trace::{dn_pairing, reversed_test_field};
use crate::error::Result;
use crate::forward::{solve_linear_mgt, ExteriorInput, Forcing, Model, Potential, Scheme};
use crate::fracgrid::trapezoid_weights;

/// Both sides of an identity and their relative mismatch.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(f64::EPSILON);
        IdentityCheck {
            lhs,
            rhs,
            residual: (lhs - rhs).abs() / scale,
        }
    }

    pub(crate) fn zero() -> Self {
        IdentityCheck {
            lhs: 0.0,
            rhs: 0.0,
            residual: 0.0,
        }
    }
}

/// `⟨Λ_q φ₁, φ₂⋆⟩` against `⟨Λ_{q⋆} φ₂, φ₁⋆⟩`.
pub fn adjoint_identity_residual(
    model: &Model,
    q: &Potential,
    phi1: &ExteriorInput,
    phi2: &ExteriorInput,
    scheme: Scheme,
) -> Result<IdentityCheck> {
    if phi1.is_zero() || phi2.is_zero() {
        return Ok(IdentityCheck::zero());
    }
    let q_rev = q.time_reversed(model.grid(), model.time());
    let u1 = solve_linear_mgt(model, q, Forcing::None, phi1, scheme)?;
    let u2 = solve_linear_mgt(model, &q_rev, Forcing::None, phi2, scheme)?;
    let lhs = dn_pairing(model, &u1, &reversed_test_field(model, phi2))?;
    let rhs = dn_pairing(model, &u2, &reversed_test_field(model, phi1))?;
    Ok(IdentityCheck::new(lhs, rhs))
}

/// `∫_{Ω_T} (q₁ - q₂⋆)(u₁ - φ₁)(u₂ - φ₂)⋆` against `⟨(Λ_{q₁} - Λ_{q₂⋆})φ₁, φ₂⋆⟩`,
/// where `u₁` solves with `q₁` and `u₂` with `q₂`.
pub fn integral_identity_residual(
    model: &Model,
    q1: &Potential,
    q2: &Potential,
    phi1: &ExteriorInput,
    phi2: &ExteriorInput,
    scheme: Scheme,
) -> Result<IdentityCheck> {
    let grid = model.grid();
    let time = model.time();
    let q2_rev = q2.time_reversed(grid, time);
    let u1 = solve_linear_mgt(model, q1, Forcing::None, phi1, scheme)?;
    let u2 = solve_linear_mgt(model, q2, Forcing::None, phi2, scheme)?;
    let u3 = solve_linear_mgt(model, &q2_rev, Forcing::None, phi1, scheme)?;

    let omega = grid.omega();
    let dq = q1.to_field(grid, time).sub(&q2_rev.to_field(grid, time))?;
    let w1 = u1.u.rows(omega);
    let w2 = u2.u.time_reversed().rows(omega);
    let dq = dq.rows(omega);
    let weights = trapezoid_weights(time.steps, time.dt);
    let lhs = grid.cell()
        * weights
            .iter()
            .enumerate()
            .map(|(n, w)| {
                w * (0..omega.len())
                    .map(|i| dq[(i, n)] * w1[(i, n)] * w2[(i, n)])
                    .sum::<f64>()
            })
            .sum::<f64>();

    let test = reversed_test_field(model, phi2);
    let rhs = dn_pairing(model, &u1, &test)? - dn_pairing(model, &u3, &test)?;
    Ok(IdentityCheck::new(lhs, rhs))
}
