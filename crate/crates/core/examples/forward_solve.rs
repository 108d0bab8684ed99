//! Solves the linear and the cubic problem for one exterior pulse and prints the energy ledger residual.

use mgtlab::forward::*;

fn main() -> mgtlab::Result<()> {
    let model = Model::interval(32, 2.0, 5, 0.75, MgtParams::default(), TimeGrid::new(1.0, 2e-3)?)?;
    let grid = model.grid();
    let bump = Profile::Bump { amplitude: 1.0, center: vec![0.1], radius: 0.8 };
    let q = Potential::stationary(bump.on_omega(grid));
    let phi = ExteriorInput::window_mode(grid, grid.w1(), 0, Envelope::SinPower { t0: 0.0, t1: 1.0, k: 4 }, 50.0);

    let lin = solve_linear_mgt(&model, &q, Forcing::None, &phi, Scheme::ImplicitMidpoint)?;
    let ledger = energy_identity_check(&model, &lin, &q, Forcing::None);
    println!("linear: |u|_X = {:.4e}, energy residual {:.2e}", lin.x_norm(&model), ledger.max_residual());

    let cubic = Nonlinearity::monomial(Coefficient::Constant(1.0), 3);
    let nl = solve_semilinear_mgt(&model, &q, &cubic, &phi, Forcing::None, PicardSettings::with_tol(1e-12))?;
    println!(
        "cubic:  |u|_X = {:.4e}, {} picard iterations, distance to linear {:.3e}",
        nl.x_norm(&model),
        nl.info.iterations,
        nl.x_distance(&lin, &model)
    );
    Ok(())
}
