use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::basis::{inner_nodes, SpatialBasis};
use super::columns::{check_divisor, coefficient_profile, quotient_trace, source_trace_columns};
use super::lsq::{Regularization, Tikhonov};
use super::oracle::DnOracle;
use super::report::{Conditioning, IterationRecord, ReconstructionReport, RecoveredField};
use super::runge::RungeComponent;
use super::taylor::steer;
use crate::error::{Error, Result};
use crate::forward::{
    beta_source, dimension_gate, kappa_source, solve_linear_mgt, Coefficient, CoefficientJet, Compact, Forcing,
    Model, Nonlinearity, PicardSettings, Potential, Scheme, StateTrajectory,
};

/// Settings shared by the β and κ recoveries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WesterveltInversion {
    /// Step of the second-order ε-quotient relative to the steered datum.
    pub eta: f64,
    pub bank_size: usize,
    pub bank_amplitude: f64,
    pub runge_lambda: f64,
    pub regularization: Regularization,
    pub basis: SpatialBasis,
    pub divisor_floor: f64,
    pub picard: PicardSettings,
}

impl Default for WesterveltInversion {
    fn default() -> Self {
        WesterveltInversion {
            eta: 1e-3,
            bank_size: 16,
            bank_amplitude: 1.0,
            runge_lambda: 1e-14,
            regularization: Regularization::Relative { factor: 1e-12 },
            basis: SpatialBasis::Constant,
            divisor_floor: 0.1,
            picard: PicardSettings::with_tol(1e-13),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Term {
    Beta,
    Kappa,
}

impl Term {
    fn name(self) -> &'static str {
        match self {
            Term::Beta => "beta",
            Term::Kappa => "kappa",
        }
    }

    fn wrap(self, c: Coefficient) -> Nonlinearity {
        match self {
            Term::Beta => Nonlinearity::WesterveltBeta(c),
            Term::Kappa => Nonlinearity::WesterveltKappa(c),
        }
    }

    fn component(self) -> RungeComponent {
        match self {
            Term::Beta => RungeComponent::Value,
            Term::Kappa => RungeComponent::Rate,
        }
    }
}

/// Midpoint samples `(u, ∂ₜu, ∂ₜ²u)` on Ω.
fn midpoint_jet(model: &Model, traj: &StateTrajectory) -> [DMatrix<f64>; 3] {
    let c = traj.to_compact(model);
    [Compact::midpoints(&c.u), Compact::midpoints(&c.v), Compact::midpoints(&c.a)]
}

/// The symmetric bilinear form `B(v₁, v₂)` of a Westervelt term, so that `𝓕(v) = B(v, v)`.
fn bilinear(model: &Model, nl: &Nonlinearity, v1: &[DMatrix<f64>; 3], v2: &[DMatrix<f64>; 3]) -> Result<DMatrix<f64>> {
    let quad = |a: &[DMatrix<f64>; 3]| -> Result<DMatrix<f64>> {
        match nl {
            Nonlinearity::WesterveltBeta(c) => Ok(beta_source(&CoefficientJet::new(model, c), &a[0], &a[1], &a[2])),
            Nonlinearity::WesterveltKappa(c) => Ok(kappa_source(&CoefficientJet::new(model, c), &a[1], &a[2])),
            _ => Err(Error::InvalidParameter("not a Westervelt nonlinearity".into())),
        }
    };
    let plus = [&v1[0] + &v2[0], &v1[1] + &v2[1], &v1[2] + &v2[2]];
    let minus = [&v1[0] - &v2[0], &v1[1] - &v2[1], &v1[2] - &v2[2]];
    Ok((quad(&plus)? - quad(&minus)?) * 0.25)
}

/// `‖B₁(v₁, v₂) - B₂(v₁, v₂)‖` for two Westervelt terms of the same kind.
pub fn polarization_residual(
    model: &Model,
    first: &Nonlinearity,
    second: &Nonlinearity,
    v1: &StateTrajectory,
    v2: &StateTrajectory,
) -> Result<f64> {
    let (j1, j2) = (midpoint_jet(model, v1), midpoint_jet(model, v2));
    Ok((bilinear(model, first, &j1, &j2)? - bilinear(model, second, &j1, &j2)?).norm())
}

/// Recovers the stationary `β` in `∂ₜ²(β u²)` from second ε-quotients of exterior traces.
pub fn recover_westervelt_beta(
    oracle: &dyn DnOracle,
    q: &Potential,
    settings: &WesterveltInversion,
    truth: Option<&Coefficient>,
) -> Result<ReconstructionReport> {
    recover(oracle, q, settings, truth, Term::Beta)
}

/// Recovers the stationary `κ` in `∂ₜ(κ (∂ₜu)²)`, steering `∂ₜv` instead of `v`.
pub fn recover_westervelt_kappa(
    oracle: &dyn DnOracle,
    q: &Potential,
    settings: &WesterveltInversion,
    truth: Option<&Coefficient>,
) -> Result<ReconstructionReport> {
    recover(oracle, q, settings, truth, Term::Kappa)
}

fn recover(
    oracle: &dyn DnOracle,
    q: &Potential,
    settings: &WesterveltInversion,
    truth: Option<&Coefficient>,
    term: Term,
) -> Result<ReconstructionReport> {
    let model = oracle.model();
    dimension_gate(model)?;
    let grid = model.grid();
    let mut report = ReconstructionReport::new(&format!("westervelt_{}", term.name()));

    let steered = steer(model, q, settings.bank_size, settings.bank_amplitude, settings.runge_lambda, term.component())?;
    report.set("runge_relative_residual", steered.relative_residual);
    let v = solve_linear_mgt(model, q, Forcing::None, &steered.psi, Scheme::ImplicitMidpoint)?;
    let jet = midpoint_jet(model, &v);
    let steered_part = match term {
        Term::Beta => &jet[0],
        Term::Kappa => &jet[1],
    };
    let divisor = steered_part.map(|x| x * x);
    let margin = check_divisor(model, &divisor, &inner_nodes(grid), settings.divisor_floor, 2)?;
    report.set("divisor_margin", margin);

    let data = quotient_trace(oracle, &steered.psi.scaled(settings.eta), 2, 1.0)? / settings.eta.powi(2);
    let sources = settings
        .basis
        .functions(grid)
        .into_iter()
        .map(|e| {
            let nl = term.wrap(Coefficient::Separable { profile: e, poly: vec![1.0] });
            Ok(bilinear(model, &nl, &jet, &jet)? * 2.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let a = source_trace_columns(model, q, &sources, oracle.window())?;
    let sol = Tikhonov::new(&a)?.solve(&a, &data, settings.regularization)?;
    let profile = settings.basis.synthesize(grid, sol.x.as_slice());

    report.conditioning.push(Conditioning::from_solution(term.name(), a.nrows(), a.ncols(), &sol, data.norm()));
    let field = RecoveredField::new(grid, term.name(), profile, truth.map(|c| coefficient_profile(model, c)));
    report.log.push(IterationRecord {
        iteration: 0,
        misfit: sol.residual,
        step_norm: sol.x.norm(),
        relative_error: field.relative_error,
    });
    report.fields.push(field);
    Ok(report)
}
