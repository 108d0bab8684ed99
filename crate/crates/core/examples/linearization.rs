//! Differentiates the cubic solution map in the amplitudes and compares with finite-difference quotients.

use mgtlab::forward::*;
use mgtlab::linearize::*;

fn main() -> mgtlab::Result<()> {
    let model = Model::interval(32, 2.0, 5, 0.75, MgtParams::default(), TimeGrid::new(1.0, 1e-3)?)?;
    let grid = model.grid();
    let q = Potential::stationary(Profile::Bump { amplitude: 2.0, center: vec![0.1], radius: 0.8 }.on_omega(grid));
    let g = Nonlinearity::monomial(Coefficient::Constant(1.0), 3);
    let env = Envelope::SinPower { t0: 0.0, t1: 1.0, k: 4 };
    let bank: Vec<_> = (0..2).map(|k| ExteriorInput::window_mode(grid, grid.w1(), k, env.clone(), 100.0)).collect();
    let settings = PicardSettings::with_tol(1e-13);
    let stack = LinearizationStack::build(&model, &q, &g, &bank, &[1.0, 0.5], 2, settings)?;
    let etas = default_eta_ladder(50.0);
    for idx in [vec![0], vec![0, 1]] {
        for kind in [QuotientKind::OneSided, QuotientKind::Central] {
            let r = linearization_convergence_report(&model, &q, &g, &stack, &idx, &etas, kind)?;
            let errs: Vec<String> = r.rows.iter().map(|row| format!("{:.2e}", row.error)).collect();
            println!("order {} {kind:?}: errors [{}], slope {:.3}", idx.len(), errs.join(", "), r.fit.slope);
        }
    }
    Ok(())
}
