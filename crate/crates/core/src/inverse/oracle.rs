use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use crate::dnmap::dn_trace;
use crate::error::Result;
use crate::forward::{
    solve_semilinear_mgt, solve_westervelt, ExteriorInput, Forcing, Model, Nonlinearity,
    PicardSettings, Potential, StateTrajectory,
};

/// Access to exterior measurements for chosen exterior data.
pub trait DnOracle: Sync {
    fn model(&self) -> &Model;

    /// Measurement nodes in Ω_e.
    fn window(&self) -> &[usize];

    /// The solution for datum `phi`, used only by diagnostics.
    fn solve(&self, phi: &ExteriorInput) -> Result<StateTrajectory>;

    /// Flattened trace `b A ∂ₜu + c A u` on the window at every time level.
    fn trace(&self, phi: &ExteriorInput) -> Result<DVector<f64>> {
        Ok(window_trace(self.model(), &self.solve(phi)?, self.window()))
    }
}

/// Window rows of the DN trace, flattened column by column.
pub fn window_trace(model: &Model, traj: &StateTrajectory, window: &[usize]) -> DVector<f64> {
    let w = dn_trace(model, traj).flux.rows(window);
    DVector::from_column_slice(w.as_slice())
}

/// Forward-simulated measurements on W₂ for known coefficients, with optional seeded noise.
pub struct SyntheticDn {
    pub model: Model,
    pub q: Potential,
    pub g: Nonlinearity,
    pub settings: PicardSettings,
    /// Standard deviation relative to the largest trace entry of each measurement.
    pub noise_level: f64,
    pub seed: u64,
    window: Vec<usize>,
}

impl SyntheticDn {
    pub fn new(model: &Model, q: &Potential, g: &Nonlinearity, settings: PicardSettings) -> Self {
        SyntheticDn {
            model: model.clone(),
            q: q.clone(),
            g: g.clone(),
            settings,
            noise_level: 0.0,
            seed: 0,
            window: model.grid().w2().to_vec(),
        }
    }

    pub fn with_noise(mut self, level: f64, seed: u64) -> Self {
        self.noise_level = level;
        self.seed = seed;
        self
    }

    pub fn with_window(mut self, window: &[usize]) -> Self {
        self.window = window.to_vec();
        self
    }
}

impl DnOracle for SyntheticDn {
    fn model(&self) -> &Model {
        &self.model
    }

    fn window(&self) -> &[usize] {
        &self.window
    }

    fn solve(&self, phi: &ExteriorInput) -> Result<StateTrajectory> {
        if self.g.is_westervelt() {
            solve_westervelt(&self.model, &self.q, &self.g, phi, self.settings)
        } else {
            solve_semilinear_mgt(&self.model, &self.q, &self.g, phi, Forcing::None, self.settings)
        }
    }

    fn trace(&self, phi: &ExteriorInput) -> Result<DVector<f64>> {
        let mut t = window_trace(&self.model, &self.solve(phi)?, &self.window);
        if self.noise_level > 0.0 {
            // the stream depends only on the seed and the datum, so parallel calls stay reproducible
            let mut h = Sha256::new();
            h.update(self.seed.to_le_bytes());
            h.update(serde_json::to_vec(phi)?);
            let digest: [u8; 32] = h.finalize().into();
            let mut rng = ChaCha8Rng::from_seed(digest);
            let sigma = self.noise_level * t.amax();
            if sigma > 0.0 {
                let normal = Normal::new(0.0, sigma).expect("finite sigma");
                t.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
            }
        }
        Ok(t)
    }
}
