use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{solve_linear_mgt, Envelope, ExteriorInput, Forcing, Model, Potential, Scheme, StateTrajectory};
use crate::fracgrid::Grid;

/// Modes per temporal family in [`input_bank`].
const MODES: usize = 4;

/// `count` exterior data on `window`: spatial modes `0..4` crossed with `sin⁴` envelopes on
/// `[0, T]` modulated at increasing frequencies.
pub fn input_bank(grid: &Grid, window: &[usize], count: usize, final_time: f64, amplitude: f64) -> Vec<ExteriorInput> {
    (0..count)
        .map(|k| {
            let mode = k % MODES;
            let family = k / MODES;
            let base = Envelope::SinPower { t0: 0.0, t1: final_time, k: 4 };
            let envelope = if family == 0 {
                base
            } else {
                Envelope::Modulated {
                    base: Box::new(base),
                    freq: family.div_ceil(2) as f64 / final_time,
                    phase: if family % 2 == 1 { 0.0 } else { std::f64::consts::FRAC_PI_2 },
                }
            };
            ExteriorInput::window_mode(grid, window, mode, envelope, amplitude)
        })
        .collect()
}

/// Linear solutions for every bank member, in parallel.
pub fn solve_bank(model: &Model, q: &Potential, bank: &[ExteriorInput], scheme: Scheme) -> Result<Vec<StateTrajectory>> {
    if bank.is_empty() {
        return Err(Error::EmptyBank);
    }
    bank.par_iter().map(|phi| solve_linear_mgt(model, q, Forcing::None, phi, scheme)).collect()
}
