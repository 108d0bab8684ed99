//! Builds fractional Laplacians on one grid and checks their algebraic laws.

use mgtlab::fracgrid::{check_operator_laws, FracOp, Grid};

fn main() -> mgtlab::Result<()> {
    let grid = Grid::interval(2.0, 63, 5)?;
    let base = FracOp::new(&grid, 0.5)?;
    let ops = [0.25, 0.5, 0.75]
        .iter()
        .map(|&s| base.with_exponent(s))
        .collect::<mgtlab::Result<Vec<_>>>()?;
    let rep = check_operator_laws(&ops, 200, 1);
    println!("symmetry residual  {:.2e}", rep.max_symmetry_residual());
    println!("min rayleigh       {:.3}", rep.min_rayleigh());
    println!("semigroup residual {:.2e}", rep.max_semigroup_residual());
    for p in &rep.poincare {
        println!("poincare t={} s={}: ratio {:.4} <= bound {:.4}", p.t, p.s, p.max_ratio, p.bound);
    }
    Ok(())
}
