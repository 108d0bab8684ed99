use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::mollified_indicator;
use super::lsq::{tikhonov, Regularization};
use crate::error::{Error, Result};
use crate::forward::{ExteriorInput, Model, StateTrajectory};
use crate::fracgrid::{trapezoid_weights, SpaceTimeField, Support};

/// Which part of the solution is steered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RungeComponent {
    /// `u_φ - φ` on Ω.
    #[default]
    Value,
    /// `∂ₜ(u_φ - φ)` on Ω.
    Rate,
}

/// Ridge fit of a target on Ω_T by combinations of bank solutions.
#[derive(Clone, Debug, Serialize)]
pub struct RungeProblem {
    #[serde(skip)]
    pub target: SpaceTimeField,
    pub bank: Vec<ExteriorInput>,
    pub lambda: f64,
    pub component: RungeComponent,
    pub coefficients: Vec<f64>,
    /// `‖Σ cᵢ(u_{φᵢ} - φᵢ) - target‖` in L²(Ω_T).
    pub residual: f64,
    pub target_norm: f64,
}

impl RungeProblem {
    /// The steering datum `Σ cᵢ φᵢ`.
    pub fn input(&self) -> ExteriorInput {
        ExteriorInput::combination(&self.bank, &self.coefficients)
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual / self.target_norm.max(f64::MIN_POSITIVE)
    }
}

/// `χ(x) sin²(πt/T)` with `χ` the mollified indicator of Ω.
pub fn runge_target(model: &Model) -> SpaceTimeField {
    let chi = mollified_indicator(model.grid());
    let t_end = model.time().final_time();
    SpaceTimeField::from_fn(model.grid(), model.time().steps, model.time().dt, Support::Omega, |i, t| {
        chi[i] * (std::f64::consts::PI * t / t_end).sin().powi(2)
    })
}

/// Rows `(i, n)` of Ω_T scaled so that Euclidean norms are L²(Ω_T) norms.
fn l2_rows(model: &Model, field: &SpaceTimeField) -> DVector<f64> {
    let omega = model.grid().omega();
    let w = trapezoid_weights(model.time().steps, model.time().dt);
    let cell = model.grid().cell();
    let v = field.values();
    DVector::from_iterator(
        omega.len() * w.len(),
        w.iter().enumerate().flat_map(|(n, wn)| omega.iter().map(move |&i| (cell * wn).sqrt() * v[(i, n)])),
    )
}

/// Ridge-regularized coefficients minimizing `‖Σ cᵢ(u_{φᵢ} - φᵢ) - target‖² + λ‖c‖²`.
pub fn runge_control(
    model: &Model,
    target: &SpaceTimeField,
    bank: &[ExteriorInput],
    solutions: &[StateTrajectory],
    lambda: f64,
    component: RungeComponent,
) -> Result<RungeProblem> {
    if bank.is_empty() || solutions.is_empty() {
        return Err(Error::EmptyBank);
    }
    if bank.len() != solutions.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} solutions", bank.len()),
            got: format!("{}", solutions.len()),
        });
    }
    let cols: Vec<DVector<f64>> = solutions
        .iter()
        .map(|s| l2_rows(model, if component == RungeComponent::Value { &s.u } else { &s.ut }))
        .collect();
    let a = DMatrix::from_columns(&cols);
    let b = l2_rows(model, target);
    let sol = tikhonov(&a, &b, Regularization::Absolute { lambda })?;
    Ok(RungeProblem {
        target: target.clone(),
        bank: bank.to_vec(),
        lambda,
        component,
        coefficients: sol.x.iter().copied().collect(),
        residual: sol.residual,
        target_norm: b.norm(),
    })
}

/// `Σ cᵢ (u_{φᵢ} - φᵢ)` of the chosen component.
pub fn steered_field(problem: &RungeProblem, solutions: &[StateTrajectory]) -> SpaceTimeField {
    let pick = |s: &StateTrajectory| if problem.component == RungeComponent::Value { s.u.clone() } else { s.ut.clone() };
    let mut acc = pick(&solutions[0]).scaled(problem.coefficients[0]);
    for (s, c) in solutions.iter().zip(&problem.coefficients).skip(1) {
        acc = acc.add(&pick(s).scaled(*c)).expect("same layout");
    }
    acc
}
