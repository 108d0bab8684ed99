//! Generates a matrix of Dirichlet-to-Neumann pairings and checks the adjoint and integral identities.

use mgtlab::dnmap::*;
use mgtlab::forward::*;
use mgtlab::inverse::input_bank;

fn main() -> mgtlab::Result<()> {
    let model = Model::interval(32, 2.0, 5, 0.75, MgtParams::default(), TimeGrid::new(1.0, 1e-3)?)?;
    let grid = model.grid();
    let bump = |a: f64| Potential::stationary(Profile::Bump { amplitude: a, center: vec![0.1], radius: 0.8 }.on_omega(grid));
    let (q1, q2) = (bump(1.0), bump(0.5));
    let inputs = input_bank(grid, grid.w1(), 4, 1.0, 1.0);
    let tests = input_bank(grid, grid.w2(), 4, 1.0, 1.0);
    let data = DnDataset::generate(&model, &q1, None, &inputs, &tests, PicardSettings::default(), serde_json::json!({}))?;
    println!("pairings:\n{:.4e}", data.pairings);

    let adj = adjoint_identity_residual(&model, &q1, &inputs[0], &tests[0], Scheme::ImplicitMidpoint)?;
    let int = integral_identity_residual(&model, &q1, &q2, &inputs[0], &tests[0], Scheme::ImplicitMidpoint)?;
    println!("adjoint identity residual  {:.2e}", adj.residual);
    println!("integral identity residual {:.2e}", int.residual);
    Ok(())
}
