//! Sweeps the parabolic regularization down to zero and prints the deviation table.

use mgtlab::forward::*;
use mgtlab::regularize::*;

fn main() -> mgtlab::Result<()> {
    let model = Model::interval(32, 2.0, 5, 0.75, MgtParams::default(), TimeGrid::new(1.0, 2e-3)?)?;
    let grid = model.grid();
    let q = Potential::stationary(Profile::Bump { amplitude: 1.0, center: vec![0.1], radius: 0.8 }.on_omega(grid));
    let phi = ExteriorInput::window_mode(grid, grid.w1(), 0, Envelope::SinPower { t0: 0.0, t1: 1.0, k: 4 }, 1.0);
    let mut ladder = default_ladder();
    ladder.push(0.0);
    let sweep = regularization_sweep(&model, &q, Forcing::None, &phi, &ladder, Scheme::ImplicitMidpoint)?;
    print!("{}", sweep.to_csv());
    for r in &sweep.rows {
        println!("eps {:.0e}: third-derivative deviation {:.3e}", r.eps, r.dev_uttt);
    }
    println!("deviations decrease: {}", sweep.deviations_decrease());
    println!("dissipation spread:  {:.3}", sweep.dissipation_spread());
    Ok(())
}
