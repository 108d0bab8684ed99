use nalgebra::DMatrix;
use serde::Serialize;

use super::exterior::Lift;
use super::model::{Forcing, Model, Potential, StateTrajectory};

/// Per-level energy terms and per-step residuals of the differentiated energy identity.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EnergyLedger {
    /// `½‖∂ₜ²u‖²`
    pub kinetic: Vec<f64>,
    /// `(b/2)‖A^{s/2}∂ₜu‖²`
    pub elastic: Vec<f64>,
    /// `‖A^{s/2}u‖²`
    pub stiffness: Vec<f64>,
    /// `α‖∂ₜ²u‖²`
    pub damping: Vec<f64>,
    /// `c⟨A u, ∂ₜ²u⟩`
    pub cross_stiffness: Vec<f64>,
    /// `⟨q u, ∂ₜ²u⟩`
    pub cross_potential: Vec<f64>,
    /// `⟨F, ∂ₜ²u⟩` including the exterior lift
    pub forcing: Vec<f64>,
    /// `(E_{n+1} - E_n)/dt - ½(P_n + P_{n+1})`, one entry per step
    pub residual: Vec<f64>,
    /// Ratio of the solution X-norm to the L²(Ω_T) norm of the total source
    pub bound_constant: f64,
}

impl EnergyLedger {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.kinetic[n] + self.elastic[n]
    }

    pub fn is_finite(&self) -> bool {
        [
            &self.kinetic,
            &self.elastic,
            &self.stiffness,
            &self.damping,
            &self.cross_stiffness,
            &self.cross_potential,
            &self.forcing,
            &self.residual,
        ]
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()))
            && self.bound_constant.is_finite()
    }
}

/// Energy balance `dE/dt = -α‖u''‖² - ⟨qu,u''⟩ - c⟨Au,u''⟩ + ⟨F,u''⟩` for
/// `E = ½‖u''‖² + (b/2)‖A^{s/2}u'‖²`, with `h^d`-weighted inner products.
pub fn energy_identity_check(
    model: &Model,
    traj: &StateTrajectory,
    q: &Potential,
    forcing: Forcing<'_>,
) -> EnergyLedger {
    let p = model.params();
    let time = model.time();
    let cell = model.grid().cell();
    let c = traj.to_compact(model);
    let a = model.a_omega();
    let au = a * &c.u;
    let av = a * &c.v;
    let qn = q.coeff().samples(model.grid(), time, 0, false);
    let (_, mut f) = forcing.samples(model);
    let lift = Lift::new(&traj.phi, model.grid(), model.op());
    if !lift.is_zero() {
        for n in 0..=time.steps {
            let mut col = f.column_mut(n);
            col += lift.source_at(p, 0.0, time.t(n));
        }
    }
    let levels = time.steps + 1;
    let dot = |x: &DMatrix<f64>, y: &DMatrix<f64>, n: usize| cell * x.column(n).dot(&y.column(n));
    let mut ledger = EnergyLedger::default();
    for n in 0..levels {
        let acc = &c.a;
        ledger.kinetic.push(0.5 * dot(acc, acc, n));
        ledger.elastic.push(0.5 * p.b * dot(&c.v, &av, n));
        ledger.stiffness.push(dot(&c.u, &au, n));
        ledger.damping.push(p.alpha * dot(acc, acc, n));
        ledger.cross_stiffness.push(p.c * dot(&au, acc, n));
        ledger.cross_potential.push(
            cell * c
                .u
                .column(n)
                .component_mul(&qn.column(n))
                .dot(&acc.column(n)),
        );
        ledger.forcing.push(dot(&f, acc, n));
    }
    let power: Vec<f64> = (0..levels)
        .map(|n| {
            -ledger.damping[n] - ledger.cross_potential[n] - ledger.cross_stiffness[n]
                + ledger.forcing[n]
        })
        .collect();
    ledger.residual = (0..time.steps)
        .map(|n| {
            (ledger.energy(n + 1) - ledger.energy(n)) / time.dt - 0.5 * (power[n] + power[n + 1])
        })
        .collect();
    let weights = crate::fracgrid::trapezoid_weights(time.steps, time.dt);
    let source_norm = (0..levels)
        .map(|n| weights[n] * cell * f.column(n).norm_squared())
        .sum::<f64>()
        .sqrt();
    let x = model.x_norm_compact(&c.u, &c.v, &c.a);
    ledger.bound_constant = if source_norm > 0.0 {
        x / source_norm
    } else {
        0.0
    };
    ledger
}
