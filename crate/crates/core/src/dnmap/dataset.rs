use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::trace::{dn_pairing, dn_trace, reversed_test_field};
use crate::error::Result;
use crate::forward::{
    solve_linear_mgt, solve_semilinear_mgt, ExteriorInput, Forcing, Model, Nonlinearity,
    PicardSettings, Potential, StateTrajectory,
};
use crate::fracgrid::io::write_matrix;

/// Pairings `⟨Λφᵢ, ρⱼ⋆⟩` over an input bank and a test bank.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DnDataset {
    pub inputs: Vec<ExteriorInput>,
    pub tests: Vec<ExteriorInput>,
    /// Row `i`, column `j`: `⟨Λφᵢ, ρⱼ⋆⟩`.
    pub pairings: DMatrix<f64>,
    /// Free-form description of the coefficients that generated the data.
    pub descriptor: serde_json::Value,
}

/// Solution for one exterior datum, linear when `g` is absent.
pub fn forward_solution(
    model: &Model,
    q: &Potential,
    g: Option<&Nonlinearity>,
    phi: &ExteriorInput,
    settings: PicardSettings,
) -> Result<StateTrajectory> {
    match g {
        Some(g) if !g.is_zero() => solve_semilinear_mgt(model, q, g, phi, Forcing::None, settings),
        _ => solve_linear_mgt(model, q, Forcing::None, phi, settings.scheme),
    }
}

impl DnDataset {
    /// Solves every input in parallel and pairs against every reversed test datum.
    pub fn generate(
        model: &Model,
        q: &Potential,
        g: Option<&Nonlinearity>,
        inputs: &[ExteriorInput],
        tests: &[ExteriorInput],
        settings: PicardSettings,
        descriptor: serde_json::Value,
    ) -> Result<Self> {
        let test_fields: Vec<_> = tests
            .iter()
            .map(|r| reversed_test_field(model, r))
            .collect();
        let rows: Vec<Vec<f64>> = inputs
            .par_iter()
            .map(|phi| {
                let traj = forward_solution(model, q, g, phi, settings)?;
                test_fields
                    .iter()
                    .map(|rho| dn_pairing(model, &traj, rho))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let pairings = DMatrix::from_fn(inputs.len(), tests.len(), |i, j| rows[i][j]);
        Ok(DnDataset {
            inputs: inputs.to_vec(),
            tests: tests.to_vec(),
            pairings,
            descriptor,
        })
    }

    /// Adds independent Gaussian noise of standard deviation `level · max|d|`.
    pub fn with_noise(&self, level: f64, seed: u64) -> Self {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        if level == 0.0 {
            return self.clone();
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let sigma = level * self.pairings.amax();
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        let mut noisy = self.clone();
        for v in noisy.pairings.iter_mut() {
            *v += normal.sample(&mut rng);
        }
        if let Some(d) = noisy.descriptor.as_object_mut() {
            d.insert("noise_level".into(), serde_json::json!(level));
            d.insert("noise_seed".into(), serde_json::json!(seed));
        }
        noisy
    }

    /// Writes `<stem>.json` (banks and descriptor), `<stem>_pairings.csv`, and optionally
    /// binary trace fields `<stem>_trace_<i>.bin`.
    pub fn save(
        &self,
        dir: &Path,
        stem: &str,
        model: Option<&Model>,
        q: &Potential,
        g: Option<&Nonlinearity>,
    ) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let manifest = dir.join(format!("{stem}.json"));
        let json = serde_json::json!({
            "inputs": self.inputs,
            "tests": self.tests,
            "descriptor": self.descriptor,
            "rows": self.pairings.nrows(),
            "cols": self.pairings.ncols(),
        });
        std::fs::write(&manifest, serde_json::to_string_pretty(&json)?)?;
        out.push(manifest);

        let csv_path = dir.join(format!("{stem}_pairings.csv"));
        std::fs::write(&csv_path, pairings_csv(&self.pairings))?;
        out.push(csv_path);

        if let Some(model) = model {
            for (i, phi) in self.inputs.iter().enumerate() {
                let traj = forward_solution(model, q, g, phi, PicardSettings::default())?;
                let trace = dn_trace(model, &traj);
                let path = dir.join(format!("{stem}_trace_{i}.bin"));
                write_matrix(
                    &path,
                    trace.trace.values(),
                    serde_json::json!({"dt": model.time().dt, "input": i}),
                )?;
                out.push(path.clone());
                out.push(path.with_extension("json"));
            }
        }
        Ok(out)
    }
}

/// CSV with header `input,test,pairing`.
pub fn pairings_csv(p: &DMatrix<f64>) -> String {
    let mut s = String::from("input,test,pairing\n");
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            s.push_str(&format!("{i},{j},{:.17e}\n", p[(i, j)]));
        }
    }
    s
}
