use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use super::basis::relative_l2_error;
use super::lsq::LsqSolution;
use crate::error::Result;
use crate::fracgrid::io::write_matrix;
use crate::fracgrid::Grid;

/// A recovered spatial coefficient with its optional ground truth.
#[derive(Clone, Debug, Serialize)]
pub struct RecoveredField {
    pub name: String,
    /// Box-length samples, zero off Ω.
    pub values: Vec<f64>,
    pub truth: Option<Vec<f64>>,
    pub relative_error: Option<f64>,
}

impl RecoveredField {
    pub fn new(grid: &Grid, name: &str, values: Vec<f64>, truth: Option<Vec<f64>>) -> Self {
        let relative_error = truth.as_ref().map(|t| relative_l2_error(grid, &values, t));
        RecoveredField { name: name.into(), values, truth, relative_error }
    }
}

/// One outer iteration of an inversion.
#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `‖data - model‖` before the update.
    pub misfit: f64,
    pub step_norm: f64,
    pub relative_error: Option<f64>,
}

/// Conditioning of one assembled linear map.
#[derive(Clone, Debug, Serialize)]
pub struct Conditioning {
    pub stage: String,
    pub rows: usize,
    pub cols: usize,
    pub lambda: f64,
    pub condition: f64,
    pub regularized_condition: f64,
    pub residual: f64,
    pub data_norm: f64,
}

impl Conditioning {
    pub fn from_solution(stage: &str, rows: usize, cols: usize, sol: &LsqSolution, data_norm: f64) -> Self {
        Conditioning {
            stage: stage.into(),
            rows,
            cols,
            lambda: sol.lambda,
            condition: sol.condition,
            regularized_condition: sol.regularized_condition,
            residual: sol.residual,
            data_norm,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionReport {
    pub kind: String,
    pub fields: Vec<RecoveredField>,
    pub conditioning: Vec<Conditioning>,
    pub log: Vec<IterationRecord>,
    pub noise_level: f64,
    /// Method-specific scalars such as measured slopes.
    pub diagnostics: serde_json::Map<String, serde_json::Value>,
}

impl ReconstructionReport {
    pub fn new(kind: &str) -> Self {
        ReconstructionReport {
            kind: kind.into(),
            fields: Vec::new(),
            conditioning: Vec::new(),
            log: Vec::new(),
            noise_level: 0.0,
            diagnostics: serde_json::Map::new(),
        }
    }

    pub fn field(&self, name: &str) -> Option<&RecoveredField> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Relative error of the named field against its truth.
    pub fn error(&self, name: &str) -> Option<f64> {
        self.field(name).and_then(|f| f.relative_error)
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).and_then(|v| v.as_f64())
    }

    pub(crate) fn set(&mut self, key: &str, value: f64) {
        self.diagnostics.insert(key.into(), serde_json::json!(value));
    }

    /// `iteration,misfit,step_norm,relative_error` rows.
    pub fn log_csv(&self) -> String {
        let mut s = String::from("iteration,misfit,step_norm,relative_error\n");
        for r in &self.log {
            let e = r.relative_error.map_or(String::new(), |e| format!("{e:e}"));
            s.push_str(&format!("{},{:e},{:e},{}\n", r.iteration, r.misfit, r.step_norm, e));
        }
        s
    }

    /// `field,relative_error,condition,regularized_condition,lambda` summary rows.
    pub fn error_csv(&self) -> String {
        let mut s = String::from("field,relative_error,condition,regularized_condition,lambda\n");
        let last = self.conditioning.last();
        for f in &self.fields {
            let e = f.relative_error.map_or(String::new(), |e| format!("{e:e}"));
            let (c, rc, l) = last.map_or((f64::NAN, f64::NAN, f64::NAN), |c| (c.condition, c.regularized_condition, c.lambda));
            s.push_str(&format!("{},{},{:e},{:e},{:e}\n", f.name, e, c, rc, l));
        }
        s
    }

    /// Writes `<stem>.json`, `<stem>_log.csv`, `<stem>_errors.csv` and one binary dump per field.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let json = dir.join(format!("{stem}.json"));
        std::fs::write(&json, serde_json::to_string_pretty(self)?)?;
        out.push(json);
        for (name, body) in [("log", self.log_csv()), ("errors", self.error_csv())] {
            let p = dir.join(format!("{stem}_{name}.csv"));
            std::fs::write(&p, body)?;
            out.push(p);
        }
        for f in &self.fields {
            let m = DMatrix::from_column_slice(f.values.len(), 1, &f.values);
            let meta = serde_json::json!({ "field": f.name, "kind": self.kind });
            let p = dir.join(format!("{stem}_{}.bin", f.name));
            write_matrix(&p, &m, meta)?;
            out.push(p);
        }
        Ok(out)
    }
}
