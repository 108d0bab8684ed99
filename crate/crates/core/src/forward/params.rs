use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of `(∂ₜ³ + α∂ₜ² + bA∂ₜ + cA)`; the relaxation time is fixed to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MgtParams {
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
}

impl MgtParams {
    pub fn new(alpha: f64, b: f64, c: f64) -> Result<Self> {
        let p = MgtParams { alpha, b, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) || !self.alpha.is_finite() || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need b > 0 and finite alpha, c (alpha={}, b={}, c={})",
                self.alpha, self.b, self.c
            )));
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        1.0
    }
}

impl Default for MgtParams {
    fn default() -> Self {
        MgtParams {
            alpha: 1.0,
            b: 1.0,
            c: 0.5,
        }
    }
}

/// Uniform time levels `0, dt, ..., steps·dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Grid on `[0, final_time]` with the step closest to `dt` that divides it evenly.
    pub fn new(final_time: f64, dt: f64) -> Result<Self> {
        if !(final_time > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need positive final time and step (T={final_time}, dt={dt})"
            )));
        }
        let steps = (final_time / dt).round().max(1.0) as usize;
        Ok(TimeGrid {
            dt: final_time / steps as f64,
            steps,
        })
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn t_mid(&self, n: usize) -> f64 {
        (n as f64 + 0.5) * self.dt
    }
}

/// Time integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    ImplicitMidpoint,
    Rk4,
}
