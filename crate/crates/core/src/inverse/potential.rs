use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::SpatialBasis;
use super::lsq::{Regularization, Tikhonov};
use super::report::{Conditioning, IterationRecord, ReconstructionReport, RecoveredField};
use crate::dnmap::{dn_pairing, reversed_test_field, DnDataset};
use crate::error::{Error, Result};
use crate::forward::{solve_linear_mgt, ExteriorInput, Forcing, Model, Potential, Scheme};
use crate::fracgrid::trapezoid_weights;

/// Settings of the Born/Newton potential inversion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialInversion {
    pub regularization: Regularization,
    pub newton_iters: usize,
    /// Factor applied to the Tikhonov weight after every Newton step.
    pub newton_decay: f64,
    pub basis: SpatialBasis,
    pub scheme: Scheme,
}

impl Default for PotentialInversion {
    fn default() -> Self {
        PotentialInversion {
            regularization: Regularization::default(),
            newton_iters: 5,
            newton_decay: 0.03,
            basis: SpatialBasis::Nodal,
            scheme: Scheme::ImplicitMidpoint,
        }
    }
}

/// Linearized data map at `q` together with the predicted pairings.
pub struct BornMap {
    /// Rows `i · tests + j`, one column per basis function.
    pub matrix: DMatrix<f64>,
    /// `⟨Λ_q φᵢ, ρⱼ⋆⟩`.
    pub predicted: DMatrix<f64>,
}

/// Assembles `∫_{Ω_T} e_p (uᵢ - φᵢ)(wⱼ - ρⱼ)⋆` where `uᵢ` solves with `q` and `wⱼ` with `q⋆`.
pub fn born_map(
    model: &Model,
    q: &Potential,
    inputs: &[ExteriorInput],
    tests: &[ExteriorInput],
    basis: &[Vec<f64>],
    scheme: Scheme,
) -> Result<BornMap> {
    if inputs.is_empty() || tests.is_empty() {
        return Err(Error::EmptyBank);
    }
    let (grid, time) = (model.grid(), model.time());
    let q_rev = q.time_reversed(grid, time);
    let forward = inputs
        .par_iter()
        .map(|phi| solve_linear_mgt(model, q, Forcing::None, phi, scheme))
        .collect::<Result<Vec<_>>>()?;
    let backward = tests
        .par_iter()
        .map(|rho| solve_linear_mgt(model, &q_rev, Forcing::None, rho, scheme))
        .collect::<Result<Vec<_>>>()?;
    let test_fields: Vec<_> = tests.iter().map(|r| reversed_test_field(model, r)).collect();
    let omega = grid.omega();
    let w = trapezoid_weights(time.steps, time.dt);
    let u: Vec<DMatrix<f64>> = forward.iter().map(|s| s.u.rows(omega)).collect();
    let v: Vec<DMatrix<f64>> = backward.iter().map(|s| s.u.time_reversed().rows(omega)).collect();
    let basis_omega: Vec<Vec<f64>> = basis.iter().map(|b| omega.iter().map(|&i| b[i]).collect()).collect();
    let nt = tests.len();
    let rows: Vec<(Vec<f64>, f64)> = (0..inputs.len() * nt)
        .into_par_iter()
        .map(|r| {
            let (i, j) = (r / nt, r % nt);
            let (ui, vj) = (&u[i], &v[j]);
            let weighted: Vec<f64> = (0..omega.len())
                .map(|x| (0..w.len()).map(|n| w[n] * ui[(x, n)] * vj[(x, n)]).sum::<f64>() * grid.cell())
                .collect();
            let row = basis_omega.iter().map(|b| b.iter().zip(&weighted).map(|(e, p)| e * p).sum()).collect();
            Ok((row, dn_pairing(model, &forward[i], &test_fields[j])?))
        })
        .collect::<Result<Vec<_>>>()?;
    let matrix = DMatrix::from_fn(rows.len(), basis.len(), |r, p| rows[r].0[p]);
    let predicted = DMatrix::from_fn(inputs.len(), nt, |i, j| rows[i * nt + j].1);
    Ok(BornMap { matrix, predicted })
}

/// Stationary profile of `q` at `t = 0` on the box.
pub fn potential_profile(model: &Model, q: &Potential) -> Vec<f64> {
    let s = q.coeff().samples(model.grid(), model.time(), 0, false);
    let mut out = vec![0.0; model.grid().len()];
    for (k, &i) in model.grid().omega().iter().enumerate() {
        out[i] = s[(k, 0)];
    }
    out
}

/// Born reconstruction of `q - prior` from DN pairings, optionally refined by Newton steps.
pub fn recover_q(
    model: &Model,
    data: &DnDataset,
    prior: &Potential,
    settings: &PotentialInversion,
    truth: Option<&Potential>,
) -> Result<ReconstructionReport> {
    if !prior.is_time_reversal_invariant() {
        return Err(Error::InvalidParameter("the prior potential must be time-reversal invariant".into()));
    }
    let grid = model.grid();
    let basis = settings.basis.functions(grid);
    let truth_profile = truth.map(|t| potential_profile(model, t));
    let prior_profile = potential_profile(model, prior);
    let mut report = ReconstructionReport::new("potential");
    report.noise_level = data.descriptor.get("noise_level").and_then(|v| v.as_f64()).unwrap_or(0.0);

    let mut coeffs = DVector::zeros(basis.len());
    let mut current = prior.clone();
    for iteration in 0..=settings.newton_iters {
        let map = born_map(model, &current, &data.inputs, &data.tests, &basis, settings.scheme)?;
        let residual = DVector::from_iterator(
            data.pairings.len(),
            (0..data.inputs.len()).flat_map(|i| {
                let map = &map;
                (0..data.tests.len()).map(move |j| data.pairings[(i, j)] - map.predicted[(i, j)])
            }),
        );
        let reg = scaled(settings.regularization, settings.newton_decay.powi(iteration as i32));
        let sol = Tikhonov::new(&map.matrix)?.solve(&map.matrix, &residual, reg)?;
        coeffs += &sol.x;
        let delta = settings.basis.synthesize(grid, coeffs.as_slice());
        let profile: Vec<f64> = prior_profile.iter().zip(&delta).map(|(p, d)| p + d).collect();
        let err = truth_profile.as_ref().map(|t| super::basis::relative_l2_error(grid, &profile, t));
        report.log.push(IterationRecord { iteration, misfit: residual.norm(), step_norm: sol.x.norm(), relative_error: err });
        let stage = if iteration == 0 { "born".to_string() } else { format!("newton_{iteration}") };
        report.conditioning.push(Conditioning::from_solution(&stage, map.matrix.nrows(), map.matrix.ncols(), &sol, residual.norm()));
        if iteration == 0 {
            report.fields.push(RecoveredField::new(grid, "q_born", profile.clone(), truth_profile.clone()));
            report.fields.push(RecoveredField::new(grid, "delta_q_born", delta.clone(), None));
        }
        current = prior.plus(&Potential::stationary(delta), grid, model.time())?;
        if iteration == settings.newton_iters {
            report.fields.push(RecoveredField::new(grid, "q", profile, truth_profile.clone()));
        }
    }
    Ok(report)
}

/// The same rule with its weight multiplied by `factor`.
fn scaled(reg: Regularization, factor: f64) -> Regularization {
    match reg {
        Regularization::Relative { factor: f } => Regularization::Relative { factor: f * factor },
        Regularization::Absolute { lambda } => Regularization::Absolute { lambda: lambda * factor },
        d @ Regularization::Discrepancy { .. } => d,
    }
}
