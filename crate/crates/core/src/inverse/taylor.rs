use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::bank::{input_bank, solve_bank};
use super::basis::{inner_nodes, SpatialBasis};
use super::columns::{check_divisor, midpoint_rows, quotient_trace, source_trace_columns, weighted_sources};
use super::lsq::{Regularization, Tikhonov};
use super::oracle::{window_trace, DnOracle};
use super::report::{Conditioning, IterationRecord, ReconstructionReport, RecoveredField};
use super::runge::{runge_control, runge_target, RungeComponent};
use crate::error::{Error, Result};
use crate::forward::{
    solve_linear_mgt, Coefficient, ExteriorInput, Forcing, Model, Nonlinearity, PicardSettings, PolyTerm,
    PolynomialType, Potential, Scheme,
};
use crate::linearize::LinearizationStack;

/// Settings of the Taylor-coefficient recovery of `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaylorInversion {
    /// Highest order `N` with `∂ᴺ_τ g(·, 0)` recovered; orders start at 2.
    pub max_order: usize,
    /// Step of the second-order ε-quotient relative to the steered datum; order `N` uses `eta^{2/N}`.
    pub eta: f64,
    pub bank_size: usize,
    pub bank_amplitude: f64,
    pub runge_lambda: f64,
    pub regularization: Regularization,
    pub basis: SpatialBasis,
    /// Floor on the per-node peak of `|∏v|^{1/N}` relative to its maximum over the inner nodes of Ω.
    pub divisor_floor: f64,
    pub picard: PicardSettings,
}

impl Default for TaylorInversion {
    fn default() -> Self {
        TaylorInversion {
            max_order: 2,
            eta: 1e-3,
            bank_size: 16,
            bank_amplitude: 1.0,
            runge_lambda: 1e-14,
            regularization: Regularization::Relative { factor: 1e-12 },
            basis: SpatialBasis::Nodal,
            divisor_floor: 0.1,
            picard: PicardSettings::with_tol(1e-13),
        }
    }
}

/// The Runge-steered datum `ψ` and its linear solution `v`.
pub struct SteeredInput {
    pub psi: ExteriorInput,
    pub relative_residual: f64,
}

/// Steers `u_ψ - ψ` toward `χ(x) sin²(πt/T)` with `component` selecting `v` or `∂ₜv`.
pub(crate) fn steer(
    model: &Model,
    q: &Potential,
    size: usize,
    amplitude: f64,
    lambda: f64,
    component: RungeComponent,
) -> Result<SteeredInput> {
    let grid = model.grid();
    let bank = input_bank(grid, grid.w1(), size, model.time().final_time(), amplitude);
    let sols = solve_bank(model, q, &bank, Scheme::ImplicitMidpoint)?;
    let problem = runge_control(model, &runge_target(model), &bank, &sols, lambda, component)?;
    Ok(SteeredInput { psi: problem.input(), relative_residual: problem.relative_residual() })
}

/// `∂ᴺ_τ g(x, 0)` at `t = 0` on the box, zero off Ω.
pub fn taylor_profile(model: &Model, g: &Nonlinearity, order: usize) -> Result<Vec<f64>> {
    let grid = model.grid();
    let sampled = g.sample(grid, model.time(), false);
    let mut out = vec![0.0; grid.len()];
    for (i, &node) in grid.omega().iter().enumerate() {
        out[node] = sampled.d_tau(order, i, 0, 0.0)?;
    }
    Ok(out)
}

/// `Σ_N d_N(x) τᴺ / N!` for the recovered orders `2, 3, …`.
pub fn taylor_polynomial(profiles: &[Vec<f64>]) -> Nonlinearity {
    let mut fact = 1.0;
    let terms: Vec<PolyTerm> = profiles
        .iter()
        .enumerate()
        .map(|(k, d)| {
            let power = k as u32 + 2;
            fact *= power as f64;
            PolyTerm {
                coeff: Coefficient::Separable { profile: d.iter().map(|v| v / fact).collect(), poly: vec![1.0] },
                power,
            }
        })
        .collect();
    if terms.is_empty() {
        return Nonlinearity::Zero;
    }
    Nonlinearity::Polynomial(PolynomialType::new(terms, None).expect("powers start at 2"))
}

/// Recovers `∂ᴺ_τ g(·, 0)` for `N = 2..=max_order` from ε-quotients of exterior traces.
///
/// Each order fits the coefficient of `d_N` in the source `-d_N vᴺ` after subtracting the trace
/// generated by the orders already recovered.
pub fn recover_g_taylor(
    oracle: &dyn DnOracle,
    q: &Potential,
    settings: &TaylorInversion,
    truth: Option<&Nonlinearity>,
) -> Result<ReconstructionReport> {
    if settings.max_order < 2 {
        return Err(Error::InvalidParameter("Taylor recovery starts at order 2".into()));
    }
    let model = oracle.model();
    let grid = model.grid();
    let window = oracle.window();
    let basis = settings.basis.functions(grid);
    let mut report = ReconstructionReport::new("taylor");

    let steered = steer(model, q, settings.bank_size, settings.bank_amplitude, settings.runge_lambda, RungeComponent::Value)?;
    report.set("runge_relative_residual", steered.relative_residual);
    let v = solve_linear_mgt(model, q, Forcing::None, &steered.psi, Scheme::ImplicitMidpoint)?;
    let v_mid = midpoint_rows(model, &v.u);
    let inner = inner_nodes(grid);

    let mut recovered: Vec<Vec<f64>> = Vec::new();
    for order in 2..=settings.max_order {
        let divisor = v_mid.map(|x| x.powi(order as i32));
        let margin = check_divisor(model, &divisor, &inner, settings.divisor_floor, order)?;
        report.set(&format!("divisor_margin_{order}"), margin);

        // quotients along ηψ are rescaled to derivatives along ψ
        let eta = settings.eta.powf(2.0 / order as f64);
        let measured = quotient_trace(oracle, &steered.psi.scaled(eta), order, 1.0)? / eta.powi(order as i32);
        let known = if recovered.is_empty() {
            DVector::zeros(measured.len())
        } else {
            let g_known = taylor_polynomial(&recovered);
            let stack = LinearizationStack::build(model, q, &g_known, std::slice::from_ref(&steered.psi), &[0.0], order, settings.picard)?;
            let w = stack.derivative(&vec![0; order]).expect("order is built");
            window_trace(model, w, window)
        };
        let data = &measured - &known;

        let sources = weighted_sources(model, &basis, &divisor, -1.0);
        let a = source_trace_columns(model, q, &sources, window)?;
        let sol = Tikhonov::new(&a)?.solve(&a, &data, settings.regularization)?;
        let profile = settings.basis.synthesize(grid, sol.x.as_slice());

        let stage = format!("order_{order}");
        report.conditioning.push(Conditioning::from_solution(&stage, a.nrows(), a.ncols(), &sol, data.norm()));
        let t = truth.map(|g| taylor_profile(model, g, order)).transpose()?;
        let field = RecoveredField::new(grid, &format!("d{order}g"), profile.clone(), t);
        report.log.push(IterationRecord {
            iteration: order,
            misfit: sol.residual,
            step_norm: sol.x.norm(),
            relative_error: field.relative_error,
        });
        report.fields.push(field);
        recovered.push(profile);
    }
    Ok(report)
}
