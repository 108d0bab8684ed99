use std::fmt::Write as _;
use std::path::Path;

use log::info;
use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Pipeline};
use super::manifest::{emit_report, now, Check, RunManifest, RunWriter};
use crate::dnmap::{
    adjoint_identity_residual, dn_pairing, forward_solution, integral_identity_residual, reversed_test_field,
    DnDataset, IdentityCheck,
};
use crate::error::{Error, Result};
use crate::forward::{
    energy_identity_check, save_trajectory, solve_linear_mgt, solve_westervelt, Coefficient, EnergyLedger, Envelope,
    ExteriorInput, Forcing, Model, Nonlinearity, PicardSettings, Potential, StateTrajectory,
};
use crate::fracgrid::{SpaceTimeField, Support};
use crate::inverse::{
    mollified_indicator, recover_g_taylor, recover_polyhomogeneous, recover_q,
    recover_westervelt_beta, recover_westervelt_kappa, relative_l2_error, taylor_profile, ReconstructionReport,
    SyntheticDn,
};
use crate::linearize::{
    default_eta_ladder, dn_derivative, linearization_convergence_report, LinearizationStack, QuotientKind,
};
use crate::regularize::{ibp_residual, regularization_sweep};
use crate::stats::loglog_fit;

type Checks = Vec<Check>;

/// Runs the configured pipeline, writes its artifacts, `manifest.json` and the report files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate()?;
    let started_at = now();
    let mut w = RunWriter::create(&config.output_dir)?;
    let mut checks = Vec::new();
    info!("running {} into {}", config.pipeline, config.output_dir.display());
    match config.pipeline {
        Pipeline::Forward => forward(config, &mut w, &mut checks)?,
        Pipeline::Dn => dn(config, &mut w, &mut checks)?,
        Pipeline::Linearize => linearize(config, &mut w, &mut checks)?,
        Pipeline::InvertQ => invert_q(config, &mut w, &mut checks)?,
        Pipeline::InvertG => invert_g(config, &mut w, &mut checks)?,
        Pipeline::InvertPoly => invert_poly(config, &mut w, &mut checks)?,
        Pipeline::InvertWestervelt => invert_westervelt(config, &mut w, &mut checks)?,
        Pipeline::Regularize => regularize(config, &mut w, &mut checks)?,
        Pipeline::Identities => identities(config, &mut w, &mut checks)?,
        Pipeline::Sweep => sweep(config, &mut w, &mut checks)?,
    }
    w.text("config.json", &config.to_json())?;
    let root = w.root().to_path_buf();
    let mut manifest = RunManifest {
        pipeline: config.pipeline.name().into(),
        config_hash: config.hash(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_at,
        finished_at: 0.0,
        artifacts: w.into_artifacts(),
        checks,
    };
    manifest.artifacts.extend(["summary.md", "checks.csv", "manifest.json"].map(String::from));
    manifest.finished_at = now();
    emit_report(std::slice::from_ref(&manifest), &root)?;
    std::fs::write(root.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Loads a config file and runs it with optional overrides of the output directory and seed.
pub fn run_config_file(path: &Path, pipeline: Option<Pipeline>, out: Option<&Path>, seed: Option<u64>) -> Result<RunManifest> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(p) = pipeline {
        cfg.pipeline = p;
    }
    if let Some(o) = out {
        cfg.output_dir = o.to_path_buf();
    }
    if seed.is_some() {
        cfg.seed = seed;
    }
    run_experiment(&cfg)
}

fn solve(model: &Model, q: &Potential, g: &Nonlinearity, phi: &ExteriorInput, settings: PicardSettings) -> Result<StateTrajectory> {
    if g.is_westervelt() {
        solve_westervelt(model, q, g, phi, settings)
    } else {
        forward_solution(model, q, Some(g), phi, settings)
    }
}

fn require_semilinear(g: &Nonlinearity, pipeline: Pipeline) -> Result<()> {
    if g.is_westervelt() {
        return Err(Error::Config(format!("pipeline {pipeline} needs a semilinear nonlinearity")));
    }
    Ok(())
}

/// `-g(u)` at the time levels, as an interior source; `None` for zero or Westervelt terms.
fn nonlinear_forcing(model: &Model, g: &Nonlinearity, traj: &StateTrajectory) -> Result<Option<SpaceTimeField>> {
    if g.is_zero() || g.is_westervelt() {
        return Ok(None);
    }
    let u = model.compact(&traj.u);
    let gu = g.sample(model.grid(), model.time(), false).apply(0, &u)?;
    Ok(Some(model.expand(&(-gu))))
}

fn ledger(model: &Model, q: &Potential, g: &Nonlinearity, traj: &StateTrajectory) -> Result<EnergyLedger> {
    let f = nonlinear_forcing(model, g, traj)?;
    Ok(energy_identity_check(model, traj, q, f.as_ref().map_or(Forcing::None, Forcing::Field)))
}

/// Largest per-step residual over the largest power term.
fn relative_energy_residual(l: &EnergyLedger) -> f64 {
    let scale = (0..l.kinetic.len())
        .map(|n| l.damping[n].abs() + l.cross_potential[n].abs() + l.cross_stiffness[n].abs() + l.forcing[n].abs())
        .fold(0.0, f64::max);
    if scale > 0.0 {
        l.max_residual() / scale
    } else {
        l.max_residual()
    }
}

fn ledger_csv(model: &Model, l: &EnergyLedger) -> String {
    let mut s = String::from("n,t,energy,kinetic,elastic,stiffness,damping,cross_stiffness,cross_potential,forcing,residual\n");
    for n in 0..l.kinetic.len() {
        let r = l.residual.get(n).map_or(String::new(), |r| format!("{r:e}"));
        let _ = writeln!(
            s,
            "{n},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{r}",
            model.time().t(n),
            l.energy(n),
            l.kinetic[n],
            l.elastic[n],
            l.stiffness[n],
            l.damping[n],
            l.cross_stiffness[n],
            l.cross_potential[n],
            l.forcing[n]
        );
    }
    s
}

fn forward(cfg: &ExperimentConfig, w: &mut RunWriter, checks: &mut Checks) -> Result<()> {
    let model = cfg.model()?;
    let q = cfg.potential(&model)?;
    let g = cfg.nonlinearity(&model)?;
    let phi = cfg.inputs(&model).swap_remove(0);
    let traj = solve(&model, &q, &g, &phi, cfg.solver)?;
    let files = save_trajectory(w.root(), "forward", &traj, &model)?;
    w.record(files);
    let l = ledger(&model, &q, &g, &traj)?;
    w.text("energy_ledger.csv", &ledger_csv(&model, &l))?;
    let t: Vec<f64> = (0..l.kinetic.len()).map(|n| model.time().t(n)).collect();
    let e: Vec<f64> = (0..l.kinetic.len()).map(|n| l.energy(n)).collect();
    w.plot("energy", &t, &e)?;
    checks.push(Check::holds("ledger_finite", l.is_finite()));
    if !g.is_westervelt() {
        checks.push(Check::at_most("energy_residual_relative", relative_energy_residual(&l), 1e-3));
    }
    checks.push(Check::at_most("picard_iterations", traj.info.iterations as f64, cfg.solver.max_iter as f64));
    Ok(())
}

fn dn(cfg: &ExperimentConfig, w: &mut RunWriter, checks: &mut Checks) -> Result<()> {
    let model = cfg.model()?;
    let q = cfg.potential(&model)?;
    let g = cfg.nonlinearity(&model)?;
    require_semilinear(&g, Pipeline::Dn)?;
    let g = (!g.is_zero()).then_some(g);
    let descriptor = serde_json::json!({ "config_hash": cfg.hash() });
    let data = DnDataset::generate(&model, &q, g.as_ref(), &cfg.inputs(&model), &cfg.tests(&model), cfg.solver, descriptor)?
        .with_noise(cfg.inversion.noise_level, cfg.noise_seed());
    let files = data.save(w.root(), "dn", Some(&model), &q, g.as_ref())?;
    w.record(files);
    let sv = data.pairings.clone().singular_values();
    let idx: Vec<f64> = (0..sv.len()).map(|k| k as f64).collect();
    w.plot("dn_singular_values", &idx, sv.as_slice())?;
    checks.push(Check::holds("pairings_finite", data.pairings.iter().all(|v| v.is_finite())));
    Ok(())
}

fn kind_name(kind: QuotientKind) -> &'static str {
    match kind {
        QuotientKind::OneSided => "one_sided",
        QuotientKind::Central => "central",
    }
}

fn linearize(cfg: &ExperimentConfig, w: &mut RunWriter, checks: &mut Checks) -> Result<()> {
    let model = cfg.model()?;
    let q = cfg.potential(&model)?;
    let g = cfg.nonlinearity(&model)?;
    require_semilinear(&g, Pipeline::Linearize)?;
    let lin = &cfg.linearize;
    let grid = model.grid();
    let bank = crate::inverse::input_bank(grid, grid.w1(), lin.eps.len(), model.time().final_time(), lin.amplitude);
    let stack = LinearizationStack::build(&model, &q, &g, &bank, &lin.eps, lin.max_order, cfg.solver)?;
    let etas = default_eta_ladder(lin.eta_scale);
    let mut csv = String::from("order,indices,kind,eta,error,slope,r2\n");
    for order in 1..=lin.max_order {
        let idx: Vec<usize> = (0..order).map(|k| k % bank.len()).collect();
        let label = idx.iter().map(|k| k.to_string()).collect::<Vec<_>>().join("-");
        for kind in [QuotientKind::OneSided, QuotientKind::Central] {
            let r = linearization_convergence_report(&model, &q, &g, &stack, &idx, &etas, kind)?;
            for row in &r.rows {
                let _ = writeln!(csv, "{order},{label},{},{:e},{:e},{:.6},{:.6}", kind_name(kind), row.eta, row.error, r.fit.slope, r.fit.r2);
            }
            let name = format!("order{order}_{}", kind_name(kind));
            let e: Vec<f64> = r.rows.iter().map(|x| x.error).collect();
            w.plot(&format!("linearize_{name}"), &etas, &e)?;
            if r.relative {
                let floor = if kind == QuotientKind::Central { 1.8 } else { 0.98 };
                checks.push(Check::at_least(&format!("slope_{name}"), r.fit.slope, floor));
            } else {
                checks.push(Check::at_most(&format!("vanishing_{name}"), e.iter().cloned().fold(0.0, f64::max), 1e-8));
            }
        }
    }
    w.text("linearize_convergence.csv", &csv)?;

    let psi = crate::inverse::input_bank(grid, grid.w2(), 1, model.time().final_time(), 1.0).swap_remove(0);
    let mut dcsv = String::from("order,linearized,quotient,eta,mismatch\n");
    for order in 1..=lin.max_order.min(2) {
        let idx: Vec<usize> = (0..order).map(|k| k % bank.len()).collect();
        let d = dn_derivative(&model, &q, &g, &bank, &idx, &psi, lin.dn_eta, cfg.solver)?;
        let _ = writeln!(dcsv, "{order},{:e},{:e},{:e},{:e}", d.linearized, d.quotient, d.eta, d.mismatch);
        if order == 1 {
            let lin_traj = solve_linear_mgt(&model, &q, Forcing::None, &bank[0], cfg.solver.scheme)?;
            let direct = dn_pairing(&model, &lin_traj, &reversed_test_field(&model, &psi))?;
            let gap = (d.linearized - direct).abs() / direct.abs().max(1.0);
            checks.push(Check::at_most("first_order_dn_vs_linear", gap, 1e-8));
        }
    }
    w.text("dn_derivatives.csv", &dcsv)?;
    Ok(())
}

fn save_report(w: &mut RunWriter, report: &ReconstructionReport, stem: &str) -> Result<()> {
    let files = report.save(w.root(), stem)?;
    w.record(files);
    let mut csv = String::from("stage,rows,cols,lambda,condition,regularized_condition,residual,data_norm\n");
    for c in &report.conditioning {
        let _ = writeln!(
            csv,
            "{},{},{},{:e},{:e},{:e},{:e},{:e}",
            c.stage, c.rows, c.cols, c.lambda, c.condition, c.regularized_condition, c.residual, c.data_norm
        );
    }
    w.text(&format!("{stem}_conditioning.csv"), &csv)?;
    let mut diag = String::from("key,value\n");
    for (k, v) in &report.diagnostics {
        let _ = writeln!(diag, "{k},{}", v.as_f64().map_or(v.to_string(), |x| format!("{x:e}")));
    }
    w.text(&format!("{stem}_diagnostics.csv"), &diag)?;
    Ok(())
}

fn oracle(cfg: &ExperimentConfig, model: &Model, q: &Potential, g: &Nonlinearity, picard: PicardSettings) -> SyntheticDn {
    SyntheticDn::new(model, q, g, picard).with_noise(cfg.inversion.noise_level, cfg.noise_seed())
}

fn invert_q(cfg: &ExperimentConfig, w: &mut RunWriter, checks: &mut Checks) -> Result<()> {
    let model = cfg.model()?;
    let q = cfg.potential(&model)?;
    let settings = &cfg.inversion.potential;
    let descriptor = serde_json::json!({ "config_hash": cfg.hash() });
    let data = DnDataset::generate(&model, &q, None, &cfg.inputs(&model), &cfg.tests(&model), cfg.solver, descriptor)?
        .with_noise(cfg.inversion.noise_level, cfg.noise_seed());
    let report = recover_q(&model, &data, &Potential::zero(), settings, Some(&q))?;
    save_report(w, &report, "invert_q")?;
    let it: Vec<f64> = report.log.iter().map(|r| r.iteration as f64).collect();
    let err: Vec<f64> = report.log.iter().map(|r| r.relative_error.unwrap_or(f64::NAN)).collect();
    w.plot("invert_q_error", &it, &err)?;
    if !q.is_zero() {
        if let Some(e) = report.error("q_born") {
            checks.push(Check::at_most("q_born_relative_error", e, 0.10));
        }
        if let Some(e) = report.error("q") {
            checks.push(Check::at_most("q_relative_error", e, 0.02));
        }
    } else if let Some(f) = report.field("q") {
        checks.push(Check::at_most("q_zero_recovery", f.values.iter().fold(0.0, |m, v| m.max(v.abs())), 1e-6));
    }
    Ok(())
}

fn l2(model: &Model, v: &[f64]) -> f64 {
    relative_l2_error(model.grid(), v, &vec![0.0; v.len()])
}

fn invert_g(cfg: &ExperimentConfig, w: &mut RunWriter, checks: &mut Checks) -> Result<()> {
    let model = cfg.model()?;
    let q = cfg.potential(&model)?;
    let g = cfg.nonlinearity(&model)?;
    if !matches!(g, Nonlinearity::Polynomial(_) | Nonlinearity::Zero) {
        return Err(Error::Config("invert-g needs a polynomial or zero nonlinearity".into()));
    }
    let settings = &cfg.inversion.taylor;
    let o = oracle(cfg, &model, &q, &g, settings.picard);
    let report = recover_g_taylor(&o, &q, settings, Some(&g))?;
    save_report(w, &report, "invert_g")?;
    let scale = 2.0 * l2(&model, &mollified_indicator(model.grid()));
    for order in 2..=settings.max_order {
        let name = format!("d{order}g");
        let Some(field) = report.field(&name) else { continue };
        let truth = taylor_profile(&model, &g, order)?;
        let tn = l2(&model, &truth);
        if tn > 0.0 {
            let limit = if order == 2 { 0.05 } else { 0.10 };
            checks.push(Check::at_most(&format!("{name}_relative_error"), relative_l2_error(model.grid(), &field.values, &truth), limit));
        } else {
            checks.push(Check::at_most(&format!("{name}_absent"), l2(&model, &field.values) / scale, 1e-3));
        }
    }
    Ok(())
}

fn invert_poly(cfg: &ExperimentConfig, w: &mut RunWriter, checks: &mut Checks) -> Result<()> {
    let model = cfg.model()?;
    let q = cfg.potential(&model)?;
    let g = cfg.nonlinearity(&model)?;
    let Nonlinearity::Polyhomogeneous(p) = &g else {
        return Err(Error::Config("invert-poly needs a polyhomogeneous nonlinearity".into()));
    };
    let exps = cfg.nonlinearity.exponents();
    let settings = &cfg.inversion.polyhomogeneous;
    let o = oracle(cfg, &model, &q, &g, settings.picard);
    let report = recover_polyhomogeneous(&o, &q, &exps, settings, Some(p))?;
    save_report(w, &report, "invert_poly")?;
    for (k, (coeff, _)) in p.terms().iter().enumerate() {
        let name = format!("alpha_{}", k + 1);
        if coeff.is_zero() {
            if let Some(f) = report.field(&name) {
                checks.push(Check::at_most(&format!("{name}_zero"), f.values.iter().fold(0.0, |m, v| m.max(v.abs())), 1e-8));
            }
        } else if let Some(e) = report.error(&name) {
            checks.push(Check::at_most(&format!("{name}_relative_error"), e, 0.05));
        }
        if let Some(gap) = report.diagnostic(&format!("joint_gap_{}", k + 1)) {
            checks.push(Check::at_most(&format!("joint_gap_{}", k + 1), gap, 0.02));
        }
    }
    if let (Some(slope), false) = (report.diagnostic("decay_slope"), p.terms()[0].0.is_zero()) {
        checks.push(Check::within("decay_slope", slope, exps[0], 0.1));
    }
    Ok(())
}

fn invert_westervelt(cfg: &ExperimentConfig, w: &mut RunWriter, checks: &mut Checks) -> Result<()> {
    let model = cfg.model()?;
    let q = cfg.potential(&model)?;
    let g = cfg.nonlinearity(&model)?;
    let settings = &cfg.inversion.westervelt;
    let o = oracle(cfg, &model, &q, &g, settings.picard);
    let (report, name, truth): (_, _, &Coefficient) = match &g {
        Nonlinearity::WesterveltBeta(c) => (recover_westervelt_beta(&o, &q, settings, Some(c))?, "beta", c),
        Nonlinearity::WesterveltKappa(c) => (recover_westervelt_kappa(&o, &q, settings, Some(c))?, "kappa", c),
        _ => return Err(Error::Config("invert-westervelt needs a westervelt_beta or westervelt_kappa term".into())),
    };
    save_report(w, &report, "invert_westervelt")?;
    if truth.is_zero() {
        if let Some(f) = report.field(name) {
            checks.push(Check::at_most(&format!("{name}_zero"), f.values.iter().fold(0.0, |m, v| m.max(v.abs())), 1e-12));
        }
    } else if let Some(e) = report.error(name) {
        checks.push(Check::at_most(&format!("{name}_relative_error"), e, 0.05));
    }
    Ok(())
}

fn regularize(cfg: &ExperimentConfig, w: &mut RunWriter, checks: &mut Checks) -> Result<()> {
    let model = cfg.model()?;
    let q = cfg.potential(&model)?;
    let phi = cfg.inputs(&model).swap_remove(0);
    let mut ladder = cfg.regularize.ladder.clone();
    if cfg.regularize.include_reference {
        ladder.push(0.0);
    }
    let l = regularization_sweep(&model, &q, Forcing::None, &phi, &ladder, cfg.solver.scheme)?;
    w.text("regularize_sweep.csv", &l.to_csv())?;
    let rows: Vec<_> = l.rows.iter().filter(|r| r.eps > 0.0).collect();
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    for (name, col) in [
        ("dev_u", rows.iter().map(|r| r.dev_u).collect::<Vec<_>>()),
        ("dev_ut", rows.iter().map(|r| r.dev_ut).collect()),
        ("dev_utt", rows.iter().map(|r| r.dev_utt).collect()),
        ("dev_uttt", rows.iter().map(|r| r.dev_uttt).collect()),
        ("weighted_dissipation", rows.iter().map(|r| r.weighted_dissipation).collect()),
    ] {
        w.plot(&format!("regularize_{name}"), &eps, &col)?;
        if name != "weighted_dissipation" {
            checks.push(Check::at_least(&format!("{name}_slope"), loglog_fit(&eps, &col).slope, 0.0));
        }
    }
    checks.push(Check::holds("deviations_decrease", l.deviations_decrease()));
    checks.push(Check::at_most("dissipation_spread", l.dissipation_spread(), 0.2));
    Ok(())
}

fn pulse(model: &Model, window: &[usize], end: f64) -> ExteriorInput {
    ExteriorInput::window_mode(model.grid(), window, 0, Envelope::SinPower { t0: 0.0, t1: end, k: 4 }, 1.0)
}

fn interior_source(model: &Model, f: impl Fn(f64, f64) -> f64) -> SpaceTimeField {
    SpaceTimeField::from_fn(model.grid(), model.time().steps, model.time().dt, Support::Omega, |i, t| {
        f(model.grid().coords(i)[0], t)
    })
}

fn identity_rows(cfg: &ExperimentConfig, model: &Model) -> Result<[(&'static str, IdentityCheck); 4]> {
    let q = cfg.potential(model)?;
    let q2 = cfg.potential.build(model, cfg.identities.second_potential_scale)?;
    let grid = model.grid();
    let end = cfg.identities.pulse_end.min(model.time().final_time());
    let (phi1, phi2) = (pulse(model, grid.w1(), end), pulse(model, grid.w2(), end));
    let scheme = cfg.solver.scheme;
    let f = interior_source(model, |x, t| (1.0 - x * x) * (3.0 * t).sin() * t);
    let g = interior_source(model, |x, t| (1.0 - x * x) * x * (2.0 * t).cos() * (1.0 - t));
    Ok([
        ("adjoint_zero_potential", adjoint_identity_residual(model, &Potential::zero(), &phi1, &phi2, scheme)?),
        ("adjoint", adjoint_identity_residual(model, &q, &phi1, &phi2, scheme)?),
        ("integral", integral_identity_residual(model, &q, &q2, &phi1, &phi2, scheme)?),
        ("ibp", ibp_residual(model, &q, &q2, Some(&f), Some(&g), scheme)?),
    ])
}

fn identities(cfg: &ExperimentConfig, w: &mut RunWriter, checks: &mut Checks) -> Result<()> {
    let dts: Vec<f64> = (0..=cfg.identities.refinements).rev().map(|k| cfg.time.dt * 2f64.powi(k as i32)).collect();
    let mut csv = String::from("dt,identity,lhs,rhs,residual\n");
    let mut integral = Vec::new();
    for &dt in &dts {
        let model = cfg.model_with_dt(dt)?;
        let rows = identity_rows(cfg, &model)?;
        for (name, c) in &rows {
            let _ = writeln!(csv, "{:e},{name},{:e},{:e},{:e}", model.time().dt, c.lhs, c.rhs, c.residual);
        }
        integral.push(rows[2].1.residual);
        if dt == cfg.time.dt {
            for (name, c) in rows {
                checks.push(Check::at_most(name, c.residual, 1e-6));
            }
        }
    }
    w.text("identities.csv", &csv)?;
    if dts.len() >= 2 && integral.iter().all(|r| *r > 0.0) {
        w.plot("identities_integral", &dts, &integral)?;
        checks.push(Check::within("integral_order", loglog_fit(&dts, &integral).slope, 2.0, 0.2));
    }
    Ok(())
}

/// Largest `L²(Ω)` distance over the shared time levels of two runs whose steps differ by an integer factor.
fn level_distance(model: &Model, coarse: &StateTrajectory, fine: &StateTrajectory) -> f64 {
    let ratio = fine.steps() / coarse.steps();
    let omega = model.grid().omega();
    let (a, b): (DMatrix<f64>, DMatrix<f64>) = (coarse.u.rows(omega), fine.u.rows(omega));
    (0..a.ncols())
        .map(|n| (a.column(n) - b.column(n * ratio)).norm())
        .fold(0.0, f64::max)
        * model.grid().cell().sqrt()
}

fn sweep(cfg: &ExperimentConfig, w: &mut RunWriter, checks: &mut Checks) -> Result<()> {
    let base = cfg.model()?;
    let q = cfg.potential(&base)?;
    let g = cfg.nonlinearity(&base)?;
    let phi = cfg.inputs(&base).swap_remove(0);
    let dts = &cfg.sweep.dts;
    let runs = dts
        .par_iter()
        .map(|&dt| {
            let model = cfg.model_with_dt(dt)?;
            let traj = solve(&model, &q, &g, &phi, cfg.solver)?;
            let l = ledger(&model, &q, &g, &traj)?;
            Ok((model, traj, l.max_residual()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("dt,successive_difference,energy_residual\n");
    let mut diffs = Vec::new();
    for (k, (model, traj, res)) in runs.iter().enumerate() {
        let d = runs.get(k + 1).map(|(_, fine, _)| level_distance(model, traj, fine));
        let ds = d.map_or(String::new(), |d| format!("{d:e}"));
        let _ = writeln!(csv, "{:e},{ds},{res:e}", model.time().dt);
        if let Some(d) = d {
            diffs.push(d);
        }
    }
    w.text("sweep.csv", &csv)?;
    let coarse: Vec<f64> = runs[..diffs.len()].iter().map(|r| r.0.time().dt).collect();
    w.plot("sweep_successive_difference", &coarse, &diffs)?;
    let all: Vec<f64> = runs.iter().map(|r| r.0.time().dt).collect();
    let res: Vec<f64> = runs.iter().map(|r| r.2).collect();
    w.plot("sweep_energy_residual", &all, &res)?;
    if diffs.len() >= 2 {
        checks.push(Check::within("time_order", loglog_fit(&coarse, &diffs).slope, 2.0, 0.2));
    }
    if !g.is_westervelt() && res.iter().all(|r| *r > 0.0) {
        checks.push(Check::within("energy_residual_order", loglog_fit(&all, &res).slope, 2.0, 0.2));
    }
    Ok(())
}
