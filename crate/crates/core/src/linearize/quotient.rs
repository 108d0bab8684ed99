use rayon::prelude::*;
use serde::Serialize;

use super::stack::LinearizationStack;
use crate::dnmap::{dn_pairing, reversed_test_field};
use crate::error::{Error, Result};
use crate::forward::{
    solve_semilinear_mgt, Compact, ExteriorInput, Forcing, Model, Nonlinearity, PicardSettings,
    Potential, SolveInfo, StateTrajectory,
};
use crate::stats::{loglog_fit, SlopeFit};

/// Finite-difference stencil in ε.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuotientKind {
    /// `(f(ε + ηe_k) - f(ε)) / η`, nested.
    OneSided,
    /// `(f(ε + ηe_k) - f(ε - ηe_k)) / 2η`, nested.
    #[default]
    Central,
}

/// The default η-ladder `{1e-2, 5e-3, 2.5e-3, 1.25e-3} · scale`.
pub fn default_eta_ladder(scale: f64) -> Vec<f64> {
    vec![1e-2 * scale, 5e-3 * scale, 2.5e-3 * scale, 1.25e-3 * scale]
}

/// Stencil offsets (as ε-shifts) and weights of the nested quotient.
fn stencil(
    m: usize,
    eps: &[f64],
    indices: &[usize],
    eta: f64,
    kind: QuotientKind,
) -> Vec<(Vec<f64>, f64)> {
    let n = indices.len();
    let (signs, denom): (&[f64], f64) = match kind {
        QuotientKind::OneSided => (&[0.0, 1.0], eta.powi(n as i32)),
        QuotientKind::Central => (&[-1.0, 1.0], (2.0 * eta).powi(n as i32)),
    };
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0..(1usize << n) {
        let mut point = eps.to_vec();
        point.resize(m, 0.0);
        let mut weight = 1.0;
        for (j, &k) in indices.iter().enumerate() {
            let hi = mask >> j & 1 == 1;
            let s = if hi { signs[1] } else { signs[0] };
            point[k] += s * eta;
            weight *= match kind {
                QuotientKind::OneSided => {
                    if hi {
                        1.0
                    } else {
                        -1.0
                    }
                }
                QuotientKind::Central => s,
            };
        }
        out.push((point, weight / denom));
    }
    out
}

/// Nested difference quotient `δ^{k_1}_η ⋯ δ^{k_N}_η u^ε` of the semilinear solution map.
#[allow(clippy::too_many_arguments)]
pub fn diff_quotient_solution_map(
    model: &Model,
    q: &Potential,
    g: &Nonlinearity,
    bank: &[ExteriorInput],
    eps: &[f64],
    indices: &[usize],
    eta: f64,
    kind: QuotientKind,
    settings: PicardSettings,
) -> Result<StateTrajectory> {
    if bank.is_empty() {
        return Err(Error::EmptyBank);
    }
    if indices.is_empty() || indices.iter().any(|&k| k >= bank.len()) {
        return Err(Error::InvalidParameter(format!(
            "bad multi-index {indices:?}"
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "η must be positive, got {eta}"
        )));
    }
    let points = stencil(bank.len(), eps, indices, eta, kind);
    let solved = points
        .par_iter()
        .map(|(p, _)| {
            solve_semilinear_mgt(
                model,
                q,
                g,
                &ExteriorInput::combination(bank, p),
                Forcing::None,
                settings,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let (m, steps) = (model.m(), model.time().steps);
    let mut acc = Compact::zeros(m, steps);
    for ((_, w), traj) in points.iter().zip(&solved) {
        let c = traj.to_compact(model);
        acc.u += c.u * *w;
        acc.v += c.v * *w;
        acc.a += c.a * *w;
    }
    let phi = if indices.len() == 1 {
        bank[indices[0]].clone()
    } else {
        ExteriorInput::zero()
    };
    let info = SolveInfo {
        scheme: settings.scheme,
        iterations: solved.iter().map(|t| t.info.iterations).sum(),
        contraction_ratios: Vec::new(),
        regularization: 0.0,
    };
    Ok(StateTrajectory::from_compact(model, &acc, phi, info))
}

/// One η-level of a convergence table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConvergenceRow {
    pub eta: f64,
    /// `‖v_N - δ^N_η u‖_X / ‖v_N‖_X`, or the absolute distance when `v_N = 0`.
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub order: usize,
    pub indices: Vec<usize>,
    pub kind: QuotientKind,
    pub relative: bool,
    pub rows: Vec<ConvergenceRow>,
    pub fit: SlopeFit,
}

impl ConvergenceReport {
    /// Errors strictly decrease down the ladder.
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    /// CSV with columns `order,indices,eta,error,slope`; the slope is the ladder fit.
    pub fn to_csv(&self) -> String {
        let idx = self
            .indices
            .iter()
            .map(|k| k.to_string())
            .collect::<Vec<_>>()
            .join("-");
        let mut out = String::from("order,indices,eta,error,slope\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:e},{:e},{:.6}\n",
                self.order, idx, r.eta, r.error, self.fit.slope
            ));
        }
        out
    }
}

/// Compares the linearized solution `∂^N_ε u^ε` with nested quotients along an η-ladder.
#[allow(clippy::too_many_arguments)]
pub fn linearization_convergence_report(
    model: &Model,
    q: &Potential,
    g: &Nonlinearity,
    stack: &LinearizationStack,
    indices: &[usize],
    etas: &[f64],
    kind: QuotientKind,
) -> Result<ConvergenceReport> {
    let v = stack
        .derivative(indices)
        .ok_or_else(|| Error::MissingDerivative(super::source::multi_index(indices)))?;
    let norm = v.x_norm(model);
    let relative = norm > 0.0;
    let rows = etas
        .iter()
        .map(|&eta| {
            let d = diff_quotient_solution_map(
                model,
                q,
                g,
                stack.bank(),
                stack.eps(),
                indices,
                eta,
                kind,
                stack.settings(),
            )?;
            let dist = v.x_distance(&d, model);
            Ok(ConvergenceRow {
                eta,
                error: if relative { dist / norm } else { dist },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = loglog_fit(
        &rows.iter().map(|r| r.eta).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.error).collect::<Vec<_>>(),
    );
    Ok(ConvergenceReport {
        order: indices.len(),
        indices: indices.to_vec(),
        kind,
        relative,
        rows,
        fit,
    })
}

/// `⟨Λ^{k_1..k_N} φ, ψ⟩` at ε = 0 from the linearized solution, with a quotient cross-check.
#[derive(Clone, Debug, Serialize)]
pub struct DnDerivative {
    pub linearized: f64,
    pub quotient: f64,
    pub eta: f64,
    pub mismatch: f64,
}

/// N-th ε-derivative of the DN pairing at ε = 0 against the test datum `psi` on W₂.
#[allow(clippy::too_many_arguments)]
pub fn dn_derivative(
    model: &Model,
    q: &Potential,
    g: &Nonlinearity,
    bank: &[ExteriorInput],
    indices: &[usize],
    psi: &ExteriorInput,
    eta: f64,
    settings: PicardSettings,
) -> Result<DnDerivative> {
    let order = indices.len();
    let zero = vec![0.0; bank.len()];
    let stack = LinearizationStack::build(model, q, g, bank, &zero, order, settings)?;
    let rho = reversed_test_field(model, psi);
    let v = stack
        .derivative(indices)
        .ok_or_else(|| Error::MissingDerivative(indices.to_vec()))?;
    let linearized = dn_pairing(model, v, &rho)?;
    let points = stencil(bank.len(), &zero, indices, eta, QuotientKind::Central);
    let quotient: f64 = points
        .par_iter()
        .map(|(p, w)| {
            let traj = solve_semilinear_mgt(
                model,
                q,
                g,
                &ExteriorInput::combination(bank, p),
                Forcing::None,
                settings,
            )?;
            Ok(w * dn_pairing(model, &traj, &rho)?)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();
    let mismatch = (linearized - quotient).abs();
    Ok(DnDerivative {
        linearized,
        quotient,
        eta,
        mismatch,
    })
}
