use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One pass/fail check of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance bound such as `<= 1e-6`.
    pub bound: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, bound: format!("<= {limit:e}"), passed: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, bound: format!(">= {limit:e}"), passed: value >= limit }
    }

    pub fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: format!("{target} +- {tol}"),
            passed: (value - target).abs() <= tol,
        }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: "true".into(), passed: ok }
    }
}

/// What a run did and whether its checks passed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub pipeline: String,
    pub config_hash: String,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    /// Paths relative to the run directory.
    pub artifacts: Vec<String>,
    pub checks: Vec<Check>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub(crate) fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// The only place a run touches its output directory.
pub struct RunWriter {
    root: PathBuf,
    artifacts: Vec<String>,
}

impl RunWriter {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(RunWriter { root: root.to_path_buf(), artifacts: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, body)?;
        self.artifacts.push(name.into());
        Ok(path)
    }

    /// Plot-ready two-column table `x,y`.
    pub fn plot(&mut self, name: &str, x: &[f64], y: &[f64]) -> Result<PathBuf> {
        let mut body = String::from("x,y\n");
        for (a, b) in x.iter().zip(y) {
            let _ = writeln!(body, "{a:e},{b:e}");
        }
        self.text(&format!("plot_{name}.csv"), &body)
    }

    /// Registers files written by a library routine into the run directory.
    pub fn record(&mut self, paths: Vec<PathBuf>) {
        for p in paths {
            let rel = p.strip_prefix(&self.root).unwrap_or(&p);
            self.artifacts.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }

    pub fn into_artifacts(self) -> Vec<String> {
        self.artifacts
    }
}

/// Writes `summary.md` and `checks.csv` for a list of runs; an empty list gives an empty summary.
pub fn emit_report(manifests: &[RunManifest], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut summary = String::new();
    let mut csv = String::from("pipeline,check,value,bound,passed\n");
    for m in manifests {
        let passed = m.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(summary, "## {}\n", m.pipeline);
        let _ = writeln!(summary, "config `{}`, mgtlab {}\n", &m.config_hash[..m.config_hash.len().min(16)], m.tool_version);
        let _ = writeln!(summary, "{passed}/{} checks passed\n", m.checks.len());
        if !m.checks.is_empty() {
            summary.push_str("| check | value | bound | result |\n|---|---|---|---|\n");
        }
        for c in &m.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(summary, "| {} | {:.3e} | {} | {verdict} |", c.name, c.value, c.bound);
            let _ = writeln!(csv, "{},{},{:e},{},{}", m.pipeline, c.name, c.value, c.bound, c.passed);
        }
        if !m.artifacts.is_empty() {
            let _ = writeln!(summary, "\nartifacts: {}\n", m.artifacts.join(", "));
        }
    }
    let a = dir.join("summary.md");
    std::fs::write(&a, summary)?;
    let b = dir.join("checks.csv");
    std::fs::write(&b, csv)?;
    Ok(vec![a, b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&[], dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("summary.md")).unwrap(), "");
        let csv = std::fs::read_to_string(dir.path().join("checks.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn checks_compare_as_labelled() {
        assert!(Check::at_most("a", 1e-7, 1e-6).passed);
        assert!(!Check::at_least("b", 0.9, 1.0).passed);
        assert!(Check::within("c", 2.1, 2.0, 0.2).passed);
        assert!(!Check::holds("d", false).passed);
    }

    #[test]
    fn writer_records_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = RunWriter::create(dir.path()).unwrap();
        w.plot("p", &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        w.record(vec![dir.path().join("x.bin")]);
        assert_eq!(w.into_artifacts(), vec!["plot_p.csv".to_string(), "x.bin".to_string()]);
        let body = std::fs::read_to_string(dir.path().join("plot_p.csv")).unwrap();
        assert_eq!(body, "x,y\n1e0,3e0\n2e0,4e0\n");
    }
}
