use nalgebra::{DMatrix, DVector, LU};

use super::model::{Compact, Model, Potential};
use super::params::Scheme;
use crate::error::{Error, Result};

const BLOW_UP: f64 = 1e12;

/// Potential samples on Ω in the layout the integrators need.
#[derive(Clone, Debug)]
pub(crate) enum PotentialSamples {
    Static(DVector<f64>),
    Varying {
        mid: DMatrix<f64>,
        nodes: DMatrix<f64>,
    },
}

impl PotentialSamples {
    pub fn from_potential(model: &Model, q: &Potential) -> Self {
        let grid = model.grid();
        let time = model.time();
        if q.coeff().is_static() {
            let s = q.coeff().samples(grid, time, 0, false);
            PotentialSamples::Static(s.column(0).into_owned())
        } else {
            PotentialSamples::Varying {
                mid: q.coeff().samples(grid, time, 0, true),
                nodes: q.coeff().samples(grid, time, 0, false),
            }
        }
    }

    /// `base + extra` where `extra` holds midpoint and node samples.
    pub fn plus(&self, extra_mid: &DMatrix<f64>, extra_nodes: &DMatrix<f64>) -> Self {
        match self {
            PotentialSamples::Static(q) => PotentialSamples::Varying {
                mid: DMatrix::from_fn(extra_mid.nrows(), extra_mid.ncols(), |i, n| {
                    q[i] + extra_mid[(i, n)]
                }),
                nodes: DMatrix::from_fn(extra_nodes.nrows(), extra_nodes.ncols(), |i, n| {
                    q[i] + extra_nodes[(i, n)]
                }),
            },
            PotentialSamples::Varying { mid, nodes } => PotentialSamples::Varying {
                mid: mid + extra_mid,
                nodes: nodes + extra_nodes,
            },
        }
    }

    fn mid(&self, n: usize) -> DVector<f64> {
        match self {
            PotentialSamples::Static(q) => q.clone(),
            PotentialSamples::Varying { mid, .. } => mid.column(n).into_owned(),
        }
    }

    fn node(&self, n: usize) -> DVector<f64> {
        match self {
            PotentialSamples::Static(q) => q.clone(),
            PotentialSamples::Varying { nodes, .. } => nodes.column(n).into_owned(),
        }
    }
}

/// Integrator for `u''' + (α + reg·A)u'' + bAu' + (cA + q)u = F` on Ω with zero initial data.
pub(crate) struct Stepper<'a> {
    model: &'a Model,
    reg: f64,
    pot: PotentialSamples,
    scheme: Scheme,
    lus: Vec<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a Model, reg: f64, pot: PotentialSamples, scheme: Scheme) -> Self {
        let lus = if scheme == Scheme::ImplicitMidpoint {
            match &pot {
                PotentialSamples::Static(q) => vec![LU::new(step_matrix(model, reg, q))],
                PotentialSamples::Varying { mid, .. } => (0..mid.ncols())
                    .map(|n| LU::new(step_matrix(model, reg, &mid.column(n).into_owned())))
                    .collect(),
            }
        } else {
            Vec::new()
        };
        Stepper {
            model,
            reg,
            pot,
            scheme,
            lus,
        }
    }

    /// Integrates with midpoint forcing `mid` (m × steps) and node forcing `nodes` (m × (steps+1)).
    pub fn run(&self, mid: &DMatrix<f64>, nodes: &DMatrix<f64>) -> Result<Compact> {
        match self.scheme {
            Scheme::ImplicitMidpoint => self.midpoint(mid),
            Scheme::Rk4 => self.rk4(mid, nodes),
        }
    }

    fn midpoint(&self, forcing: &DMatrix<f64>) -> Result<Compact> {
        let model = self.model;
        let p = model.params();
        let a = model.a_omega();
        let dt = model.time().dt;
        let steps = model.time().steps;
        let mut out = Compact::zeros(model.m(), steps);
        for n in 0..steps {
            let u0 = out.u.column(n).into_owned();
            let v0 = out.v.column(n).into_owned();
            let a0 = out.a.column(n).into_owned();
            let q = self.pot.mid(n);
            let w1 = &u0 + &v0 * (0.5 * dt) + &a0 * (dt * dt / 8.0);
            let w2 = &v0 + &a0 * (0.25 * dt);
            let coupled = &a0 * (0.5 * dt * self.reg) + &w1 * (dt * p.c) + &w2 * (dt * p.b);
            let mut rhs = &a0 * (1.0 - 0.5 * dt * p.alpha) - a * coupled;
            rhs -= w1.component_mul(&q) * dt;
            rhs += forcing.column(n) * dt;
            let lu = if self.lus.len() == 1 {
                &self.lus[0]
            } else {
                &self.lus[n]
            };
            let a1 = lu.solve(&rhs).ok_or(Error::SingularStepMatrix(n))?;
            let sum = &a0 + &a1;
            let v1 = &v0 + &sum * (0.5 * dt);
            let u1 = &u0 + &v0 * dt + &sum * (0.25 * dt * dt);
            check_blow_up(n, &u1, &v1, &a1)?;
            out.u.set_column(n + 1, &u1);
            out.v.set_column(n + 1, &v1);
            out.a.set_column(n + 1, &a1);
        }
        Ok(out)
    }

    fn rk4(&self, mid: &DMatrix<f64>, nodes: &DMatrix<f64>) -> Result<Compact> {
        let model = self.model;
        let p = *model.params();
        let a = model.a_omega();
        let dt = model.time().dt;
        let steps = model.time().steps;
        let reg = self.reg;
        let rhs = |u: &DVector<f64>,
                   v: &DVector<f64>,
                   acc: &DVector<f64>,
                   q: &DVector<f64>,
                   f: DVector<f64>| {
            let coupled = u * p.c + v * p.b + acc * reg;
            let jerk = f - a * coupled - u.component_mul(q) - acc * p.alpha;
            (v.clone(), acc.clone(), jerk)
        };
        let mut out = Compact::zeros(model.m(), steps);
        for n in 0..steps {
            let u0 = out.u.column(n).into_owned();
            let v0 = out.v.column(n).into_owned();
            let a0 = out.a.column(n).into_owned();
            let (q0, qm, q1) = (self.pot.node(n), self.pot.mid(n), self.pot.node(n + 1));
            let (f0, fm, f1) = (
                nodes.column(n).into_owned(),
                mid.column(n).into_owned(),
                nodes.column(n + 1).into_owned(),
            );
            let k1 = rhs(&u0, &v0, &a0, &q0, f0);
            let k2 = rhs(
                &(&u0 + &k1.0 * (0.5 * dt)),
                &(&v0 + &k1.1 * (0.5 * dt)),
                &(&a0 + &k1.2 * (0.5 * dt)),
                &qm,
                fm.clone(),
            );
            let k3 = rhs(
                &(&u0 + &k2.0 * (0.5 * dt)),
                &(&v0 + &k2.1 * (0.5 * dt)),
                &(&a0 + &k2.2 * (0.5 * dt)),
                &qm,
                fm,
            );
            let k4 = rhs(
                &(&u0 + &k3.0 * dt),
                &(&v0 + &k3.1 * dt),
                &(&a0 + &k3.2 * dt),
                &q1,
                f1,
            );
            let w = dt / 6.0;
            let u1 = &u0 + (&k1.0 + &k2.0 * 2.0 + &k3.0 * 2.0 + &k4.0) * w;
            let v1 = &v0 + (&k1.1 + &k2.1 * 2.0 + &k3.1 * 2.0 + &k4.1) * w;
            let a1 = &a0 + (&k1.2 + &k2.2 * 2.0 + &k3.2 * 2.0 + &k4.2) * w;
            check_blow_up(n, &u1, &v1, &a1)?;
            out.u.set_column(n + 1, &u1);
            out.v.set_column(n + 1, &v1);
            out.a.set_column(n + 1, &a1);
        }
        Ok(out)
    }
}

/// `I + dt/2 (α + reg A) + b dt²/4 A + dt³/8 (cA + diag q)`.
fn step_matrix(model: &Model, reg: f64, q: &DVector<f64>) -> DMatrix<f64> {
    let p = model.params();
    let dt = model.time().dt;
    let m = model.m();
    let mut k = model.a_omega() * (0.5 * dt * reg + 0.25 * p.b * dt * dt + dt.powi(3) / 8.0 * p.c);
    for i in 0..m {
        k[(i, i)] += 1.0 + 0.5 * dt * p.alpha + dt.powi(3) / 8.0 * q[i];
    }
    k
}

fn check_blow_up(step: usize, u: &DVector<f64>, v: &DVector<f64>, a: &DVector<f64>) -> Result<()> {
    let big = u.amax().max(v.amax()).max(a.amax());
    if !big.is_finite() || big > BLOW_UP {
        return Err(Error::BlowUp {
            step,
            limit: BLOW_UP,
        });
    }
    Ok(())
}
