//! Runs a configured pipeline into a directory and prints its checks.

use mgtlab::expcli::{run_experiment, ExperimentConfig, Pipeline};

fn main() -> mgtlab::Result<()> {
    let pipeline = std::env::args().nth(1).map_or(Ok(Pipeline::Identities), |s| s.parse())?;
    let out = std::env::temp_dir().join(format!("mgtlab_example_{}", pipeline.name()));
    let cfg = ExperimentConfig { pipeline, output_dir: out.clone(), seed: Some(1), ..Default::default() };
    let manifest = run_experiment(&cfg)?;
    for c in &manifest.checks {
        println!("{:<4} {:<32} {:.3e} ({})", if c.passed { "ok" } else { "FAIL" }, c.name, c.value, c.bound);
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
