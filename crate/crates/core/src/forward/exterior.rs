use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::params::{MgtParams, TimeGrid};
use crate::error::{Error, Result};
use crate::fracgrid::{FracOp, Grid, SpaceTimeField, Support};

/// Temporal envelope with analytic first and second derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// `exp(1 - 1/(1 - σ²))` for `σ` mapping `[t0, t1]` to `[-1, 1]`, zero outside.
    Bump { t0: f64, t1: f64 },
    /// `sin^k(π (t - t0)/(t1 - t0))` on `[t0, t1]`, zero outside; `k ≥ 3` keeps it `C²`.
    SinPower { t0: f64, t1: f64, k: u32 },
    /// Quintic smoothstep from 0 at `t0` to 1 at `t1`, constant afterwards.
    Ramp { t0: f64, t1: f64 },
    /// `base(t) · sin(2π freq t + phase)`.
    Modulated {
        base: Box<Envelope>,
        freq: f64,
        phase: f64,
    },
    /// `base(T - t)`.
    Reversed {
        base: Box<Envelope>,
        final_time: f64,
    },
}

impl Envelope {
    /// One-sided limits of `(η, η', η'')` at `t`, from the right when `right` is set.
    ///
    /// Differs from [`Envelope::derivs`] only at the corners of a `SinPower` with `k < 3`.
    pub fn one_sided(&self, t: f64, right: bool) -> [f64; 3] {
        match self {
            Envelope::SinPower { t0, t1, k } if *k < 3 && ((right && t == *t0) || (!right && t == *t1)) && t0 < t1 => {
                let w = std::f64::consts::PI / (t1 - t0);
                // sin → 0 at both corners; cos → 1 at t0 and -1 at t1
                let cs = if right { 1.0 } else { -1.0 };
                match k {
                    0 => [1.0, 0.0, 0.0],
                    1 => [0.0, cs * w, 0.0],
                    _ => [0.0, 0.0, 2.0 * w * w],
                }
            }
            Envelope::Modulated { base, freq, phase } => {
                let [b0, b1, b2] = base.one_sided(t, right);
                let w = 2.0 * std::f64::consts::PI * freq;
                let (sn, cs) = (w * t + phase).sin_cos();
                [b0 * sn, b1 * sn + b0 * w * cs, b2 * sn + 2.0 * b1 * w * cs - b0 * w * w * sn]
            }
            Envelope::Reversed { base, final_time } => {
                let [v, d1, d2] = base.one_sided(final_time - t, !right);
                [v, -d1, d2]
            }
            _ => self.derivs(t),
        }
    }

    /// `(η, η', η'')` at `t`.
    pub fn derivs(&self, t: f64) -> [f64; 3] {
        match self {
            Envelope::Bump { t0, t1 } => {
                if t <= *t0 || t >= *t1 {
                    return [0.0; 3];
                }
                let k = 2.0 / (t1 - t0);
                let s = k * (t - t0) - 1.0;
                let d = 1.0 - s * s;
                let f = (1.0 - 1.0 / d).exp();
                // f' = f·φ with φ = -2s/d², f'' = f(φ² + φ'), φ' = -(2 + 6s²)/d³
                let phi = -2.0 * s / (d * d);
                let dphi = -(2.0 + 6.0 * s * s) / (d * d * d);
                [f, k * f * phi, k * k * f * (phi * phi + dphi)]
            }
            Envelope::SinPower { t0, t1, k } => {
                if t <= *t0 || t >= *t1 {
                    return [0.0; 3];
                }
                let w = std::f64::consts::PI / (t1 - t0);
                let x = w * (t - t0);
                let (sn, cs) = x.sin_cos();
                let k = *k as i32;
                let kf = k as f64;
                let v = sn.powi(k);
                let d1 = kf * sn.powi(k - 1) * cs * w;
                let d2 = kf * ((kf - 1.0) * sn.powi(k - 2) * cs * cs - sn.powi(k)) * w * w;
                [v, d1, d2]
            }
            Envelope::Ramp { t0, t1 } => {
                if t <= *t0 {
                    return [0.0; 3];
                }
                if t >= *t1 {
                    return [1.0, 0.0, 0.0];
                }
                let k = 1.0 / (t1 - t0);
                let x = k * (t - t0);
                let v = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
                let d1 = 30.0 * x * x * (1.0 - x) * (1.0 - x) * k;
                let d2 = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) * k * k;
                [v, d1, d2]
            }
            Envelope::Modulated { base, freq, phase } => {
                let [b0, b1, b2] = base.derivs(t);
                let w = 2.0 * std::f64::consts::PI * freq;
                let (sn, cs) = (w * t + phase).sin_cos();
                [
                    b0 * sn,
                    b1 * sn + b0 * w * cs,
                    b2 * sn + 2.0 * b1 * w * cs - b0 * w * w * sn,
                ]
            }
            Envelope::Reversed { base, final_time } => {
                let [v, d1, d2] = base.derivs(final_time - t);
                [v, -d1, d2]
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivs(t)[0]
    }

    pub fn reversed(&self, final_time: f64) -> Envelope {
        match self {
            Envelope::Reversed {
                base,
                final_time: f,
            } if *f == final_time => (**base).clone(),
            _ => Envelope::Reversed {
                base: Box::new(self.clone()),
                final_time,
            },
        }
    }
}

/// One separable piece `amplitude · profile(x) · η(t)` of an exterior datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExteriorComponent {
    pub nodes: Vec<usize>,
    pub profile: Vec<f64>,
    pub envelope: Envelope,
    pub amplitude: f64,
}

/// Exterior Dirichlet datum φ, a finite sum of separable components supported in Ω_e.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExteriorInput {
    pub components: Vec<ExteriorComponent>,
}

impl ExteriorInput {
    pub fn zero() -> Self {
        ExteriorInput {
            components: Vec::new(),
        }
    }

    /// Smooth `sin²` bump over the window times `cos(mode·π·ξ)` along the first axis,
    /// with `ξ ∈ (0, 1)` across the window.
    pub fn window_mode(
        grid: &Grid,
        window: &[usize],
        mode: usize,
        envelope: Envelope,
        amplitude: f64,
    ) -> Self {
        let (lo, hi) = grid.window_bounds(window);
        let profile = window
            .iter()
            .map(|&node| {
                let x = grid.coords(node);
                let mut bump = 1.0;
                let mut osc = 1.0;
                for axis in 0..x.len() {
                    let pad = grid.h();
                    let a = lo[axis] - pad;
                    let b = hi[axis] + pad;
                    let xi = (x[axis] - a) / (b - a);
                    bump *= (std::f64::consts::PI * xi).sin().powi(2);
                    if axis == 0 {
                        osc = (std::f64::consts::PI * mode as f64 * xi).cos();
                    }
                }
                bump * osc
            })
            .collect();
        ExteriorInput {
            components: vec![ExteriorComponent {
                nodes: window.to_vec(),
                profile,
                envelope,
                amplitude,
            }],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.amplitude == 0.0)
    }

    pub fn scaled(&self, a: f64) -> Self {
        ExteriorInput {
            components: self
                .components
                .iter()
                .map(|c| ExteriorComponent {
                    amplitude: c.amplitude * a,
                    ..c.clone()
                })
                .collect(),
        }
    }

    pub fn plus(&self, other: &ExteriorInput) -> Self {
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        ExteriorInput { components }
    }

    /// `Σ_i w_i φ_i`.
    pub fn combination(inputs: &[ExteriorInput], weights: &[f64]) -> Self {
        inputs
            .iter()
            .zip(weights)
            .fold(ExteriorInput::zero(), |acc, (phi, w)| {
                acc.plus(&phi.scaled(*w))
            })
    }

    /// `φ⋆(t) = φ(T - t)`.
    pub fn time_reversed(&self, final_time: f64) -> Self {
        ExteriorInput {
            components: self
                .components
                .iter()
                .map(|c| ExteriorComponent {
                    envelope: c.envelope.reversed(final_time),
                    ..c.clone()
                })
                .collect(),
        }
    }

    /// Support and compatibility checks (`η(0) = η'(0) = η''(0) = 0`).
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        self.validate_support(grid)?;
        for c in &self.components {
            let d = c.envelope.one_sided(0.0, true);
            if d.iter().any(|v| v.abs() > 1e-14) {
                return Err(Error::InvalidParameter(format!(
                    "envelope violates zero initial compatibility: {d:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn validate_support(&self, grid: &Grid) -> Result<()> {
        for c in &self.components {
            if c.nodes.len() != c.profile.len() {
                return Err(Error::ShapeMismatch {
                    expected: format!("{} profile values", c.nodes.len()),
                    got: format!("{}", c.profile.len()),
                });
            }
            if let Some(&node) = c
                .nodes
                .iter()
                .find(|&&n| n >= grid.len() || grid.in_omega(n))
            {
                return Err(Error::Support(format!(
                    "exterior datum touches node {node} in Ω"
                )));
            }
        }
        Ok(())
    }

    /// Node values of `∂ₜ^order φ` at `t` over the box.
    pub fn at(&self, nodes: usize, t: f64, order: usize) -> DVector<f64> {
        let mut v = DVector::zeros(nodes);
        for c in &self.components {
            let e = c.amplitude * c.envelope.derivs(t)[order];
            if e == 0.0 {
                continue;
            }
            for (&node, p) in c.nodes.iter().zip(&c.profile) {
                v[node] += e * p;
            }
        }
        v
    }

    /// Box field of `∂ₜ^order φ` at the time levels.
    pub fn field(&self, grid: &Grid, time: &TimeGrid, order: usize) -> SpaceTimeField {
        let mut values = DMatrix::zeros(grid.len(), time.steps + 1);
        for n in 0..=time.steps {
            values.set_column(n, &self.at(grid.len(), time.t(n), order));
        }
        SpaceTimeField::from_values(values, time.dt, Support::Exterior)
    }
}

/// Ω-part of the exterior lift, `-(A_s[Ω, ·] profile)` per component, ready for time sampling.
#[derive(Clone, Debug)]
pub struct Lift {
    parts: Vec<(DVector<f64>, Envelope, f64)>,
    m: usize,
}

impl Lift {
    pub fn new(phi: &ExteriorInput, grid: &Grid, op: &FracOp) -> Self {
        let omega = grid.omega();
        let a = op.matrix();
        let parts = phi
            .components
            .iter()
            .filter(|c| c.amplitude != 0.0)
            .map(|c| {
                let w = DVector::from_fn(omega.len(), |i, _| {
                    c.nodes
                        .iter()
                        .zip(&c.profile)
                        .map(|(&n, p)| a[(omega[i], n)] * p)
                        .sum::<f64>()
                });
                (w, c.envelope.clone(), c.amplitude)
            })
            .collect();
        Lift {
            parts,
            m: omega.len(),
        }
    }

    /// `-[b A_s ∂ₜφ + c A_s φ + reg A_s ∂ₜ²φ]` on Ω at time `t`.
    pub fn source_at(&self, params: &MgtParams, reg: f64, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (w, env, amp) in &self.parts {
            let [e0, e1, e2] = env.derivs(t);
            let k = -amp * (params.b * e1 + params.c * e0 + reg * e2);
            if k != 0.0 {
                out.axpy(k, w, 1.0);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }
}

/// `F̃ = -[b A_s ∂ₜφ + c A_s φ]` restricted to Ω, sampled at the time levels.
pub fn lift_exterior(
    phi: &ExteriorInput,
    params: &MgtParams,
    grid: &Grid,
    op: &FracOp,
    time: &TimeGrid,
) -> SpaceTimeField {
    let lift = Lift::new(phi, grid, op);
    let mut values = DMatrix::zeros(grid.len(), time.steps + 1);
    for n in 0..=time.steps {
        let s = lift.source_at(params, 0.0, time.t(n));
        for (i, &node) in grid.omega().iter().enumerate() {
            values[(node, n)] = s[i];
        }
    }
    SpaceTimeField::from_values(values, time.dt, Support::Omega)
}
