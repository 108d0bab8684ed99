//! Recovers constant Westervelt coefficients in the pressure and potential forms.

use mgtlab::forward::*;
use mgtlab::inverse::*;

fn main() -> mgtlab::Result<()> {
    let model = Model::interval(32, 2.0, 5, 1.5, MgtParams::default(), TimeGrid::new(1.0, 2e-3)?)?;
    let q = Potential::zero();
    let s = WesterveltInversion::default();
    let beta = Coefficient::Constant(0.1);
    let o = SyntheticDn::new(&model, &q, &Nonlinearity::WesterveltBeta(beta.clone()), s.picard);
    let r = recover_westervelt_beta(&o, &q, &s, Some(&beta))?;
    println!("beta  error {:.2e}", r.error("beta").unwrap_or(f64::NAN));
    let kappa = Coefficient::Constant(0.05);
    let o = SyntheticDn::new(&model, &q, &Nonlinearity::WesterveltKappa(kappa.clone()), s.picard);
    let r = recover_westervelt_kappa(&o, &q, &s, Some(&kappa))?;
    println!("kappa error {:.2e}", r.error("kappa").unwrap_or(f64::NAN));
    Ok(())
}
