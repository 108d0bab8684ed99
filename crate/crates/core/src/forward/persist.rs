use std::path::{Path, PathBuf};

use serde_json::json;

use super::model::{Model, StateTrajectory};
use crate::error::Result;
use crate::fracgrid::io::write_matrix;

/// Writes `u`, `ut`, `utt` as binary fields plus `<stem>.meta.json`; returns the paths written.
pub fn save_trajectory(
    dir: &Path,
    stem: &str,
    traj: &StateTrajectory,
    model: &Model,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let meta = json!({
        "params": model.params(),
        "s": model.op().s(),
        "dt": model.time().dt,
        "steps": model.time().steps,
        "scheme": traj.info.scheme,
        "iterations": traj.info.iterations,
        "contraction_ratios": traj.info.contraction_ratios,
        "regularization": traj.info.regularization,
    });
    let mut out = Vec::new();
    for (name, field) in [("u", &traj.u), ("ut", &traj.ut), ("utt", &traj.utt)] {
        let path = dir.join(format!("{stem}_{name}.bin"));
        write_matrix(&path, field.values(), meta.clone())?;
        out.push(path.clone());
        out.push(path.with_extension("json"));
    }
    let meta_path = dir.join(format!("{stem}.meta.json"));
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    out.push(meta_path);
    Ok(out)
}
