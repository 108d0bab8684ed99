use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{inner_nodes, SpatialBasis};
use super::columns::{check_divisor, coefficient_profile, midpoint_rows, source_trace_columns, weighted_sources};
use super::lsq::{tikhonov, Regularization, Tikhonov};
use super::oracle::{DnOracle, SyntheticDn};
use super::report::{Conditioning, IterationRecord, ReconstructionReport, RecoveredField};
use super::runge::RungeComponent;
use super::taylor::steer;
use crate::error::{Error, Result};
use crate::forward::{
    solve_linear_mgt, Coefficient, ExteriorInput, Forcing, Model, Nonlinearity, PicardSettings, Polyhomogeneous,
    Potential, Scheme,
};
use crate::stats::loglog_fit;

/// Settings of the polyhomogeneous peeling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolyhomogeneousInversion {
    /// Amplitudes `ε` applied to the steered datum, largest first.
    pub eps_ladder: Vec<f64>,
    /// Exponents of the ε-expansion kept in the extrapolation reach `r_k + span`.
    pub richardson_span: f64,
    pub bank_size: usize,
    pub bank_amplitude: f64,
    pub runge_lambda: f64,
    pub regularization: Regularization,
    pub basis: SpatialBasis,
    pub divisor_floor: f64,
    pub picard: PicardSettings,
    /// Gauss-Newton iterations of the joint amplitude fit; zero skips it.
    pub joint_iters: usize,
}

impl Default for PolyhomogeneousInversion {
    fn default() -> Self {
        PolyhomogeneousInversion {
            eps_ladder: (0..8).map(|k| 0.5f64.powi(k)).collect(),
            richardson_span: 1.5,
            bank_size: 16,
            bank_amplitude: 1.0,
            runge_lambda: 1e-14,
            regularization: Regularization::Relative { factor: 1e-12 },
            basis: SpatialBasis::Constant,
            divisor_floor: 0.1,
            picard: PicardSettings::with_tol(1e-13),
            joint_iters: 0,
        }
    }
}

/// Checks `0 < r_1 < … < r_L ≤ 1`.
pub fn validate_exponents(exponents: &[f64]) -> Result<()> {
    Polyhomogeneous::new(exponents.iter().map(|&r| (Coefficient::Constant(0.0), r)).collect()).map(|_| ())
}

/// Sums of the exponents (with repetition) in `[lo, hi]`, sorted and deduplicated.
pub fn exponent_semigroup(exponents: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut frontier = vec![0.0];
    while let Some(x) = frontier.pop() {
        for &r in exponents {
            let y = x + r;
            if y <= hi + 1e-12 && !out.iter().any(|o| (o - y).abs() < 1e-9) {
                out.push(y);
                frontier.push(y);
            }
        }
    }
    out.retain(|&e| e >= lo - 1e-12);
    out.sort_by(f64::total_cmp);
    out
}

/// `Σ_k α_k |τ|^{r_k} τ` with stationary amplitudes given on the box.
pub fn polyhomogeneous_from_profiles(profiles: &[Vec<f64>], exponents: &[f64]) -> Result<Nonlinearity> {
    if profiles.is_empty() {
        return Ok(Nonlinearity::Zero);
    }
    let terms = profiles
        .iter()
        .zip(exponents)
        .map(|(p, &r)| (Coefficient::Separable { profile: p.clone(), poly: vec![1.0] }, r))
        .collect();
    Ok(Nonlinearity::Polyhomogeneous(Polyhomogeneous::new(terms)?))
}

/// Scaled traces `trace(εψ)/ε` along the ladder.
fn ladder_traces(oracle: &dyn DnOracle, psi: &ExteriorInput, ladder: &[f64]) -> Result<Vec<DVector<f64>>> {
    ladder.par_iter().map(|&e| Ok(oracle.trace(&psi.scaled(e))? / e)).collect()
}

/// Coefficient of `ε^{exponents[0]}` in the least-squares fit `D_ε = Σ_e ε^e Z_e`.
fn richardson(ladder: &[f64], exponents: &[f64], data: &[DVector<f64>]) -> Result<DVector<f64>> {
    if ladder.len() <= exponents.len() {
        return Err(Error::InvalidParameter(format!(
            "{} amplitudes cannot separate {} powers of ε",
            ladder.len(),
            exponents.len()
        )));
    }
    let v = DMatrix::from_fn(ladder.len(), exponents.len(), |i, j| ladder[i].powf(exponents[j]));
    let pinv = v.pseudo_inverse(1e-14).map_err(|e| Error::InvalidParameter(e.into()))?;
    let mut out = DVector::zeros(data[0].len());
    for (i, d) in data.iter().enumerate() {
        out += d * pinv[(0, i)];
    }
    Ok(out)
}

/// Peels the amplitudes `α_k` of `Σ α_k |u|^{r_k} u` one exponent at a time.
///
/// Stage `k` removes the traces of the model with the amplitudes already found and extrapolates
/// the leading `ε^{r_k}` coefficient of the remainder along the ε-ladder.
pub fn recover_polyhomogeneous(
    oracle: &dyn DnOracle,
    q: &Potential,
    exponents: &[f64],
    settings: &PolyhomogeneousInversion,
    truth: Option<&Polyhomogeneous>,
) -> Result<ReconstructionReport> {
    validate_exponents(exponents)?;
    if let Some(t) = truth {
        if t.exponents() != exponents {
            return Err(Error::ExponentOrderViolation(t.exponents()));
        }
    }
    let model = oracle.model();
    let grid = model.grid();
    let window = oracle.window();
    let basis = settings.basis.functions(grid);
    let ladder = &settings.eps_ladder;
    let mut report = ReconstructionReport::new("polyhomogeneous");

    let steered = steer(model, q, settings.bank_size, settings.bank_amplitude, settings.runge_lambda, RungeComponent::Value)?;
    report.set("runge_relative_residual", steered.relative_residual);
    let psi = steered.psi;
    let v = solve_linear_mgt(model, q, Forcing::None, &psi, Scheme::ImplicitMidpoint)?;
    let v_mid = midpoint_rows(model, &v.u);
    let margin = check_divisor(model, &v_mid, &inner_nodes(grid), settings.divisor_floor, 1)?;
    report.set("divisor_margin", margin);

    let decay = decay_slope(oracle, model, &psi, &v, ladder)?;
    report.set("decay_slope", decay);

    let measured = ladder_traces(oracle, &psi, ladder)?;
    let mut recovered: Vec<Vec<f64>> = Vec::new();
    for (k, &r) in exponents.iter().enumerate() {
        let lower = polyhomogeneous_from_profiles(&recovered, exponents)?;
        let synthetic = SyntheticDn::new(model, q, &lower, settings.picard).with_window(window);
        let known = ladder_traces(&synthetic, &psi, ladder)?;
        let remainder: Vec<DVector<f64>> = measured.iter().zip(&known).map(|(m, s)| m - s).collect();
        let powers = exponent_semigroup(exponents, r, r + settings.richardson_span);
        let data = richardson(ladder, &powers, &remainder)?;

        let weight = v_mid.map(|x| x.abs().powf(r) * x);
        let sources = weighted_sources(model, &basis, &weight, -1.0);
        let a = source_trace_columns(model, q, &sources, window)?;
        let sol = Tikhonov::new(&a)?.solve(&a, &data, settings.regularization)?;
        let profile = settings.basis.synthesize(grid, sol.x.as_slice());

        let stage = format!("alpha_{}", k + 1);
        report.conditioning.push(Conditioning::from_solution(&stage, a.nrows(), a.ncols(), &sol, data.norm()));
        let t = truth.map(|t| coefficient_profile(model, &t.terms()[k].0));
        let field = RecoveredField::new(grid, &stage, profile.clone(), t);
        report.log.push(IterationRecord {
            iteration: k + 1,
            misfit: sol.residual,
            step_norm: sol.x.norm(),
            relative_error: field.relative_error,
        });
        report.fields.push(field);
        recovered.push(profile);
    }

    if settings.joint_iters > 0 {
        let joint = joint_fit(oracle, q, exponents, &psi, settings)?;
        for (k, profile) in joint.into_iter().enumerate() {
            let name = format!("alpha_{}", k + 1);
            let peeled = &recovered[k];
            let gap = super::basis::relative_l2_error(grid, peeled, &profile);
            report.set(&format!("joint_gap_{}", k + 1), gap);
            let t = truth.map(|t| coefficient_profile(model, &t.terms()[k].0));
            report.fields.push(RecoveredField::new(grid, &format!("{name}_joint"), profile, t));
        }
    }
    Ok(report)
}

/// Slope of `‖v - u_ε/ε‖_X` against `ε` on a log-log scale.
fn decay_slope(
    oracle: &dyn DnOracle,
    model: &Model,
    psi: &ExteriorInput,
    v: &crate::forward::StateTrajectory,
    ladder: &[f64],
) -> Result<f64> {
    let gaps = ladder
        .par_iter()
        .map(|&e| {
            let u = oracle.solve(&psi.scaled(e))?;
            let c = u.to_compact(model);
            let w = v.to_compact(model);
            Ok(model.x_norm_compact(&(&c.u / e - &w.u), &(&c.v / e - &w.v), &(&c.a / e - &w.a)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(loglog_fit(ladder, &gaps).slope)
}

/// Joint Gauss-Newton fit of all amplitudes to the ladder traces, started from zero.
pub fn joint_fit(
    oracle: &dyn DnOracle,
    q: &Potential,
    exponents: &[f64],
    psi: &ExteriorInput,
    settings: &PolyhomogeneousInversion,
) -> Result<Vec<Vec<f64>>> {
    let model = oracle.model();
    let grid = model.grid();
    let window = oracle.window();
    let ladder = &settings.eps_ladder;
    let dim = settings.basis.dim(grid);
    let measured = stacked(&ladder_traces(oracle, psi, ladder)?);

    let profiles = |theta: &DVector<f64>| -> Vec<Vec<f64>> {
        (0..exponents.len())
            .map(|k| settings.basis.synthesize(grid, &theta.as_slice()[k * dim..(k + 1) * dim]))
            .collect()
    };
    let predict = |theta: &DVector<f64>| -> Result<DVector<f64>> {
        let g = polyhomogeneous_from_profiles(&profiles(theta), exponents)?;
        let syn = SyntheticDn::new(model, q, &g, settings.picard).with_window(window);
        Ok(stacked(&ladder_traces(&syn, psi, ladder)?))
    };

    let mut theta = DVector::zeros(dim * exponents.len());
    for _ in 0..settings.joint_iters {
        let base = predict(&theta)?;
        let residual = &measured - &base;
        let cols = (0..theta.len())
            .into_par_iter()
            .map(|j| {
                let h = 1e-6 * theta[j].abs().max(1.0);
                let mut t = theta.clone();
                t[j] += h;
                Ok((predict(&t)? - &base) / h)
            })
            .collect::<Result<Vec<_>>>()?;
        let jac = DMatrix::from_columns(&cols);
        let step = tikhonov(&jac, &residual, settings.regularization)?.x;
        theta += &step;
        if step.norm() <= 1e-10 * theta.norm().max(1.0) {
            break;
        }
    }
    Ok(profiles(&theta))
}

fn stacked(parts: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().cloned()))
}
