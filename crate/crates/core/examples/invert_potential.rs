//! Recovers a bump potential from noiseless pairings with a Born step and Newton refinement.

use mgtlab::dnmap::DnDataset;
use mgtlab::forward::*;
use mgtlab::inverse::*;

fn main() -> mgtlab::Result<()> {
    let model = Model::interval(32, 2.0, 5, 0.75, MgtParams::default(), TimeGrid::new(1.0, 2e-3)?)?;
    let grid = model.grid();
    let q = Potential::stationary(Profile::Bump { amplitude: 2.0, center: vec![0.1], radius: 0.8 }.on_omega(grid));
    let inputs = input_bank(grid, grid.w1(), 8, 1.0, 1.0);
    let tests = input_bank(grid, grid.w2(), 8, 1.0, 1.0);
    let data = DnDataset::generate(&model, &q, None, &inputs, &tests, PicardSettings::default(), serde_json::json!({}))?;
    let report = recover_q(&model, &data, &Potential::zero(), &PotentialInversion::default(), Some(&q))?;
    print!("{}", report.log_csv());
    println!("born error   {:.2}%", 100.0 * report.error("q_born").unwrap_or(f64::NAN));
    println!("newton error {:.2}%", 100.0 * report.error("q").unwrap_or(f64::NAN));
    Ok(())
}
