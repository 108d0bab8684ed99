use nalgebra::DMatrix;

use super::coefficient::Coefficient;
use super::exterior::ExteriorInput;
use super::model::{total_drive, Compact, Forcing, Model, Potential, SolveInfo, StateTrajectory};
use super::nonlinearity::Nonlinearity;
use super::semilinear::{Contraction, PicardSettings};
use super::stepper::{PotentialSamples, Stepper};
use crate::error::{Error, Result};

/// Ensures `s > n/2`.
pub fn dimension_gate(model: &Model) -> Result<()> {
    let n = model.grid().dim();
    let s = model.op().s();
    if s <= n as f64 / 2.0 {
        return Err(Error::DimensionGate { s, n });
    }
    Ok(())
}

/// Time samples of a coefficient and its first two time derivatives at step midpoints.
pub(crate) struct CoefficientJet {
    pub value: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
}

impl CoefficientJet {
    pub fn new(model: &Model, c: &Coefficient) -> Self {
        let (g, t) = (model.grid(), model.time());
        CoefficientJet {
            value: c.samples(g, t, 0, true),
            d1: c.samples(g, t, 1, true),
            d2: c.samples(g, t, 2, true),
        }
    }
}

/// `∂ₜ²(β u²) = β''u² + 4β'u'u + 2βu''u + 2β(u')²` from midpoint samples of `(u, u', u'')`.
pub(crate) fn beta_source(
    beta: &CoefficientJet,
    u: &DMatrix<f64>,
    ut: &DMatrix<f64>,
    utt: &DMatrix<f64>,
) -> DMatrix<f64> {
    DMatrix::from_fn(u.nrows(), u.ncols(), |i, n| {
        let (b, b1, b2) = (beta.value[(i, n)], beta.d1[(i, n)], beta.d2[(i, n)]);
        let (x, x1, x2) = (u[(i, n)], ut[(i, n)], utt[(i, n)]);
        b2 * x * x + 4.0 * b1 * x1 * x + 2.0 * b * x2 * x + 2.0 * b * x1 * x1
    })
}

/// `∂ₜ(κ (u')²) = κ'(u')² + 2κu'u''`.
pub(crate) fn kappa_source(
    kappa: &CoefficientJet,
    ut: &DMatrix<f64>,
    utt: &DMatrix<f64>,
) -> DMatrix<f64> {
    DMatrix::from_fn(ut.nrows(), ut.ncols(), |i, n| {
        let (k, k1) = (kappa.value[(i, n)], kappa.d1[(i, n)]);
        let (x1, x2) = (ut[(i, n)], utt[(i, n)]);
        k1 * x1 * x1 + 2.0 * k * x1 * x2
    })
}

/// The Westervelt right-hand side evaluated at midpoints of a compact trajectory.
pub(crate) fn westervelt_source(
    model: &Model,
    nl: &Nonlinearity,
    c: &Compact,
) -> Result<DMatrix<f64>> {
    let u = Compact::midpoints(&c.u);
    let ut = Compact::midpoints(&c.v);
    let utt = Compact::midpoints(&c.a);
    match nl {
        Nonlinearity::WesterveltBeta(beta) => Ok(beta_source(
            &CoefficientJet::new(model, beta),
            &u,
            &ut,
            &utt,
        )),
        Nonlinearity::WesterveltKappa(kappa) => {
            Ok(kappa_source(&CoefficientJet::new(model, kappa), &ut, &utt))
        }
        _ => Err(Error::InvalidParameter(
            "not a Westervelt nonlinearity".into(),
        )),
    }
}

/// Frozen-nonlinearity iteration for `(∂ₜ³ + α∂ₜ² + bA∂ₜ + cA + q)u = 𝓕(u)`.
pub fn solve_westervelt(
    model: &Model,
    q: &Potential,
    nl: &Nonlinearity,
    phi: &ExteriorInput,
    settings: PicardSettings,
) -> Result<StateTrajectory> {
    dimension_gate(model)?;
    if !nl.is_westervelt() {
        return Err(Error::InvalidParameter(
            "solve_westervelt needs a Westervelt nonlinearity".into(),
        ));
    }
    phi.validate_support(model.grid())?;
    let (mid0, nodes0) = total_drive(model, Forcing::None, phi, 0.0);
    let stepper = Stepper::new(
        model,
        0.0,
        PotentialSamples::from_potential(model, q),
        super::params::Scheme::ImplicitMidpoint,
    );
    let mut current = Compact::zeros(model.m(), model.time().steps);
    let mut monitor = Contraction::new(settings);
    let mut iteration = 0;
    loop {
        iteration += 1;
        let mid = if iteration == 1 || nl.is_zero() {
            mid0.clone()
        } else {
            &mid0 + westervelt_source(model, nl, &current)?
        };
        let next = stepper.run(&mid, &nodes0)?;
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
        scheme: super::params::Scheme::ImplicitMidpoint,
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
