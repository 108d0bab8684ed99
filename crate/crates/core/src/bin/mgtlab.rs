use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mgtlab::expcli::{configure_threads, emit_report, run_config_file, run_experiment, ExperimentConfig, Pipeline, RunManifest};

#[derive(Parser)]
#[command(name = "mgtlab", version, about = "Nonlocal MGT solvers, DN maps and inversions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; defaults are used when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise seed, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// Print only warnings and the summary line
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Forward solve with energy ledger
    Forward(RunArgs),
    /// DN pairing matrix for the input and test banks
    Dn(RunArgs),
    /// Amplitude derivatives against difference quotients
    Linearize(RunArgs),
    /// Born and Newton recovery of the potential
    InvertQ(RunArgs),
    /// Taylor coefficients of a polynomial nonlinearity
    InvertG(RunArgs),
    /// Polyhomogeneous amplitudes by peeling and joint fit
    InvertPoly(RunArgs),
    /// Constant Westervelt coefficient
    InvertWestervelt(RunArgs),
    /// Vanishing regularization sweep
    Regularize(RunArgs),
    /// Adjoint, integral and integration-by-parts identities
    Identities(RunArgs),
    /// Time-step refinement study
    Sweep(RunArgs),
    /// Combine the manifests of finished runs into one summary
    Report {
        #[arg(long)]
        out: PathBuf,
        runs: Vec<PathBuf>,
    },
    /// Print the default config
    DefaultConfig,
}

fn run(pipeline: Pipeline, args: RunArgs) -> mgtlab::Result<RunManifest> {
    match &args.config {
        Some(path) => run_config_file(path, Some(pipeline), args.out.as_deref(), args.seed),
        None => {
            let mut cfg = ExperimentConfig { pipeline, ..Default::default() };
            if let Some(o) = args.out {
                cfg.output_dir = o;
            }
            if args.seed.is_some() {
                cfg.seed = args.seed;
            }
            run_experiment(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = matches!(&cli.command, Command::Forward(a) | Command::Dn(a) | Command::Linearize(a)
        | Command::InvertQ(a) | Command::InvertG(a) | Command::InvertPoly(a) | Command::InvertWestervelt(a)
        | Command::Regularize(a) | Command::Identities(a) | Command::Sweep(a) if a.quiet);
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if quiet { "warn" } else { "info" })).init();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let (pipeline, args) = match cli.command {
        Command::DefaultConfig => {
            println!("{}", ExperimentConfig::default().to_json());
            return ExitCode::SUCCESS;
        }
        Command::Report { out, runs } => {
            let result = runs.iter().map(|d| RunManifest::load(d)).collect::<mgtlab::Result<Vec<_>>>().and_then(|m| emit_report(&m, &out));
            return match result {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            };
        }
        Command::Forward(a) => (Pipeline::Forward, a),
        Command::Dn(a) => (Pipeline::Dn, a),
        Command::Linearize(a) => (Pipeline::Linearize, a),
        Command::InvertQ(a) => (Pipeline::InvertQ, a),
        Command::InvertG(a) => (Pipeline::InvertG, a),
        Command::InvertPoly(a) => (Pipeline::InvertPoly, a),
        Command::InvertWestervelt(a) => (Pipeline::InvertWestervelt, a),
        Command::Regularize(a) => (Pipeline::Regularize, a),
        Command::Identities(a) => (Pipeline::Identities, a),
        Command::Sweep(a) => (Pipeline::Sweep, a),
    };
    match run(pipeline, args) {
        Ok(m) => {
            let passed = m.checks.iter().filter(|c| c.passed).count();
            if !quiet {
                for c in &m.checks {
                    println!("{} {} = {:.3e} ({})", if c.passed { "pass" } else { "FAIL" }, c.name, c.value, c.bound);
                }
            }
            println!("{}: {passed}/{} checks passed", m.pipeline, m.checks.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
