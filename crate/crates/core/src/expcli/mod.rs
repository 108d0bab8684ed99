//! Experiment runner: JSON configs, pipelines, run manifests and reports.
//!
//! Every run writes into one directory: the pipeline artifacts, `config.json`,
//! `manifest.json`, `summary.md` and `checks.csv`. CSV outputs depend only on the
//! config (and seed), so reruns are byte-identical.

mod config;
mod manifest;
mod pipelines;

pub use config::{
    BankSpec, ExperimentConfig, GridSpec, IdentitySpec, InversionSpec, LinearizeSpec, NonlinearitySpec, Pipeline,
    PolyTermSpec, PolyhomogeneousTermSpec, PotentialSpec, RegularizeSpec, SweepSpec, TimeSpec,
};
pub use manifest::{emit_report, Check, RunManifest, RunWriter};
pub use pipelines::{run_config_file, run_experiment};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "MGTLAB_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`] when set; returns the count used.
pub fn configure_threads() -> crate::Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(None) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| crate::Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    if n == 0 {
        return Err(crate::Error::Config(format!("{THREADS_ENV} must be positive")));
    }
    // a second call finds the pool already built; that is fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}
