//! Peels two polyhomogeneous terms off the amplitude ladder and refines them jointly.

use mgtlab::forward::*;
use mgtlab::inverse::*;

fn main() -> mgtlab::Result<()> {
    let model = Model::interval(32, 2.0, 5, 0.75, MgtParams::default(), TimeGrid::new(1.0, 2e-3)?)?;
    let q = Potential::zero();
    let truth = Polyhomogeneous::new(vec![(Coefficient::Constant(1.0), 0.5), (Coefficient::Constant(0.5), 1.0)])?;
    let o = SyntheticDn::new(&model, &q, &Nonlinearity::Polyhomogeneous(truth.clone()), PicardSettings::with_tol(1e-13));
    let s = PolyhomogeneousInversion { joint_iters: 6, ..Default::default() };
    let r = recover_polyhomogeneous(&o, &q, &[0.5, 1.0], &s, Some(&truth))?;
    print!("{}", r.error_csv());
    for key in ["decay_slope", "joint_gap_2"] {
        println!("{key} {:.4e}", r.diagnostic(key).unwrap_or(f64::NAN));
    }
    Ok(())
}
