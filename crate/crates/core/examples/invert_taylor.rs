//! Recovers the quadratic and cubic Taylor coefficients of a polynomial nonlinearity.

use mgtlab::forward::*;
use mgtlab::inverse::*;

fn main() -> mgtlab::Result<()> {
    let model = Model::interval(32, 2.0, 5, 0.75, MgtParams::default(), TimeGrid::new(1.0, 2e-3)?)?;
    let bump = Profile::Bump { amplitude: 1.0, center: vec![0.1], radius: 0.8 };
    let a = Coefficient::separable(model.grid(), &bump, vec![1.0]);
    let g = Nonlinearity::Polynomial(PolynomialType::new(
        vec![PolyTerm { coeff: a, power: 2 }, PolyTerm { coeff: Coefficient::Constant(0.5), power: 3 }],
        None,
    )?);
    let q = Potential::zero();
    let oracle = SyntheticDn::new(&model, &q, &g, PicardSettings::with_tol(1e-13));
    let settings = TaylorInversion { max_order: 3, ..Default::default() };
    let report = recover_g_taylor(&oracle, &q, &settings, Some(&g))?;
    print!("{}", report.error_csv());
    Ok(())
}
