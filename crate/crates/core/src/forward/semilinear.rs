use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::exterior::ExteriorInput;
use super::model::{total_drive, Compact, Forcing, Model, Potential, SolveInfo, StateTrajectory};
use super::nonlinearity::Nonlinearity;
use super::params::Scheme;
use super::stepper::{PotentialSamples, Stepper};
use crate::error::{Error, Result};

/// Fixed-point iteration controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PicardSettings {
    /// Relative tolerance on successive iterates in the X-norm.
    pub tol: f64,
    pub max_iter: usize,
    pub scheme: Scheme,
}

impl Default for PicardSettings {
    fn default() -> Self {
        PicardSettings {
            tol: 1e-10,
            max_iter: 200,
            scheme: Scheme::ImplicitMidpoint,
        }
    }
}

impl PicardSettings {
    pub fn with_tol(tol: f64) -> Self {
        PicardSettings {
            tol,
            ..Self::default()
        }
    }
}

/// Tracks successive differences and decides when to stop.
pub(crate) struct Contraction {
    settings: PicardSettings,
    last: Option<f64>,
    pub ratios: Vec<f64>,
    streak: usize,
}

impl Contraction {
    pub fn new(settings: PicardSettings) -> Self {
        Contraction {
            settings,
            last: None,
            ratios: Vec::new(),
            streak: 0,
        }
    }

    /// Records `‖u_{k+1} - u_k‖`; returns `Ok(true)` once converged.
    pub fn step(&mut self, diff: f64, norm: f64, iteration: usize) -> Result<bool> {
        let converged = diff <= self.settings.tol * norm || diff == 0.0;
        if let Some(prev) = self.last.filter(|_| !converged) {
            let ratio = if prev > 0.0 { diff / prev } else { 0.0 };
            self.ratios.push(ratio);
            if ratio >= 1.0 {
                self.streak += 1;
                if self.streak >= 3 {
                    return Err(Error::NoContraction {
                        ratios: self.ratios.clone(),
                    });
                }
            } else {
                self.streak = 0;
            }
        }
        self.last = Some(diff);
        if converged {
            return Ok(true);
        }
        if iteration >= self.settings.max_iter {
            return Err(Error::MaxIterExceeded(self.settings.max_iter));
        }
        Ok(false)
    }
}

/// Picard iteration `u ← L⁻¹(F + F̃ - g(u))` from `u = 0`.
pub fn solve_semilinear_mgt(
    model: &Model,
    q: &Potential,
    g: &Nonlinearity,
    phi: &ExteriorInput,
    forcing: Forcing<'_>,
    settings: PicardSettings,
) -> Result<StateTrajectory> {
    if g.is_westervelt() {
        return Err(Error::InvalidParameter(
            "use solve_westervelt for Westervelt terms".into(),
        ));
    }
    phi.validate_support(model.grid())?;
    let (mid0, nodes0) = total_drive(model, forcing, phi, 0.0);
    let stepper = Stepper::new(
        model,
        0.0,
        PotentialSamples::from_potential(model, q),
        settings.scheme,
    );
    let g_mid = g.sample(model.grid(), model.time(), true);
    let g_nodes = g.sample(model.grid(), model.time(), false);

    let mut current = Compact::zeros(model.m(), model.time().steps);
    let mut monitor = Contraction::new(settings);
    let mut iteration = 0;
    loop {
        iteration += 1;
        let (mid, nodes) = if iteration == 1 || g.is_zero() {
            (mid0.clone(), nodes0.clone())
        } else {
            let u_mid = Compact::midpoints(&current.u);
            let nl_mid = g_mid.apply(0, &u_mid)?;
            let nl_nodes = if settings.scheme == Scheme::Rk4 {
                g_nodes.apply(0, &current.u)?
            } else {
                DMatrix::zeros(nodes0.nrows(), nodes0.ncols())
            };
            (&mid0 - nl_mid, &nodes0 - nl_nodes)
        };
        let next = stepper.run(&mid, &nodes)?;
        let diff = model.x_norm_compact(
            &(&next.u - &current.u),
            &(&next.v - &current.v),
            &(&next.a - &current.a),
        );
        let norm = model.x_norm_compact(&next.u, &next.v, &next.a);
        current = next;
        if monitor.step(diff, norm, iteration)? {
            break;
        }
    }
    let info = SolveInfo {
        scheme: settings.scheme,
        iterations: iteration,
        contraction_ratios: monitor.ratios,
        regularization: 0.0,
    };
    Ok(StateTrajectory::from_compact(
        model,
        &current,
        phi.clone(),
        info,
    ))
}
