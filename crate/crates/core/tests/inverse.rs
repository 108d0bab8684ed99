mod common;

use common::*;
use mgtlab::dnmap::*;
use mgtlab::forward::*;
use mgtlab::inverse::*;
use mgtlab::Error;
use nalgebra::{DMatrix, DVector};

fn banks(m: &Model) -> (Vec<ExteriorInput>, Vec<ExteriorInput>) {
    let g = m.grid();
    (input_bank(g, g.w1(), 8, 1.0, 1.0), input_bank(g, g.w2(), 8, 1.0, 1.0))
}

fn dataset(m: &Model, q: &Potential) -> DnDataset {
    let (inputs, tests) = banks(m);
    DnDataset::generate(m, q, None, &inputs, &tests, PicardSettings::default(), serde_json::json!({})).unwrap()
}

fn profile_potential(p: &[f64]) -> Potential {
    Potential::stationary(p.to_vec())
}

fn flat(d: &DnDataset) -> DVector<f64> {
    DVector::from_iterator(d.pairings.len(), d.pairings.transpose().iter().cloned())
}

/// Gauss-Newton on the pairings with a finite-difference Jacobian and a truncated pseudoinverse.
fn oracle_reconstruction(m: &Model, data: &DnDataset, iters: usize) -> (Vec<f64>, DMatrix<f64>) {
    let grid = m.grid();
    let omega = grid.omega().to_vec();
    let target = flat(data);
    let mut profile = vec![0.0; grid.len()];
    let mut first_jacobian = None;
    for _ in 0..iters {
        let base = flat(&dataset(m, &profile_potential(&profile)));
        let h = 1e-3;
        let cols: Vec<DVector<f64>> = omega
            .iter()
            .map(|&i| {
                let mut p = profile.clone();
                p[i] += h;
                let plus = flat(&dataset(m, &profile_potential(&p)));
                p[i] -= 2.0 * h;
                (plus - flat(&dataset(m, &profile_potential(&p)))) / (2.0 * h)
            })
            .collect();
        let jac = DMatrix::from_columns(&cols);
        let svd = jac.clone().svd(true, true);
        let cut = svd.singular_values.max() * 1e-6;
        let step = svd.solve(&(&target - &base), cut).unwrap();
        for (k, &i) in omega.iter().enumerate() {
            profile[i] += step[k];
        }
        first_jacobian.get_or_insert(jac);
    }
    (profile, first_jacobian.unwrap())
}

#[test]
fn q_recovery_meets_born_and_newton_targets_and_agrees_with_the_oracle() {
    let m = model(32, 0.75, 2e-3);
    let q = bump_potential(&m, 2.0);
    let data = dataset(&m, &q);
    let report = recover_q(&m, &data, &Potential::zero(), &PotentialInversion::default(), Some(&q)).unwrap();
    let born = report.error("q_born").unwrap();
    let newton = report.error("q").unwrap();
    assert!(born <= 0.10, "born {born}");
    assert!(newton <= 0.02, "newton {newton}");
    assert_eq!(report.log.len(), 6);
    assert!(report.conditioning.iter().all(|c| c.condition.is_finite()));

    let (oracle, jac) = oracle_reconstruction(&m, &data, 5);
    let truth = potential_profile(&m, &q);
    let oracle_err = relative_l2_error(m.grid(), &oracle, &truth);
    assert!(oracle_err <= 0.05, "oracle {oracle_err}");
    let ours = &report.field("q").unwrap().values;
    let gap = relative_l2_error(m.grid(), ours, &oracle);
    assert!(gap <= 0.05, "gap to oracle {gap}");

    // the Born matrix at the zero prior is the derivative of the pairings
    let basis = SpatialBasis::Nodal.functions(m.grid());
    let (inputs, tests) = banks(&m);
    let map = born_map(&m, &Potential::zero(), &inputs, &tests, &basis, Scheme::ImplicitMidpoint).unwrap();
    let rel = (&map.matrix + &jac).norm() / jac.norm();
    let rel_minus = (&map.matrix - &jac).norm() / jac.norm();
    assert!(rel.min(rel_minus) <= 1e-3, "{rel} {rel_minus}");
}

#[test]
fn born_step_is_linear_in_the_data() {
    let m = model(32, 0.75, 2e-3);
    let q = bump_potential(&m, 1.0);
    let base = dataset(&m, &Potential::zero());
    let d1 = dataset(&m, &q);
    let d2 = dataset(&m, &bump_potential(&m, -0.5));
    let settings = PotentialInversion { newton_iters: 0, regularization: Regularization::Absolute { lambda: 1e-20 }, ..Default::default() };
    let born = |pairings: DMatrix<f64>| {
        let d = DnDataset { pairings, ..base.clone() };
        let r = recover_q(&m, &d, &Potential::zero(), &settings, None).unwrap();
        DVector::from_vec(r.field("delta_q_born").unwrap().values.clone())
    };
    let r1 = &d1.pairings - &base.pairings;
    let r2 = &d2.pairings - &base.pairings;
    let x1 = born(&base.pairings + &r1);
    let x2 = born(&base.pairings + &r2);
    let x12 = born(&base.pairings + &r1 + &r2);
    let x1_doubled = born(&base.pairings + &r1 * 2.0);
    assert!((&x12 - &x1 - &x2).norm() <= 1e-10 * x12.norm().max(1.0), "{}", (&x12 - &x1 - &x2).norm());
    assert!((&x1_doubled - &x1 * 2.0).norm() <= 1e-10 * x1_doubled.norm().max(1.0));
}

#[test]
fn matching_prior_recovers_no_update() {
    let m = model(32, 0.75, 2e-3);
    let q = bump_potential(&m, 1.0);
    let data = dataset(&m, &q);
    let r = recover_q(&m, &data, &q, &PotentialInversion { newton_iters: 0, ..Default::default() }, Some(&q)).unwrap();
    let delta = &r.field("delta_q_born").unwrap().values;
    let norm = delta.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm <= 1e-6, "{norm}");
}

#[test]
fn recover_q_rejects_a_non_reversible_prior() {
    let m = model(32, 0.75, 2e-3);
    let data = dataset(&m, &Potential::zero());
    let prior = Potential::new(separable(&m, Profile::Constant { value: 1.0 }, vec![0.0, 1.0]), false, m.grid(), m.time()).unwrap();
    assert!(recover_q(&m, &data, &prior, &PotentialInversion::default(), None).is_err());
}

#[test]
fn runge_fits_in_span_targets_and_improves_with_nested_banks() {
    let m = model(32, 0.75, 2e-3);
    let q = Potential::zero();
    let g = m.grid();
    let bank = input_bank(g, g.w1(), 32, 1.0, 1.0);
    let sols = solve_bank(&m, &q, &bank, Scheme::ImplicitMidpoint).unwrap();

    let member = sols[1].u.sub(&bank[1].field(g, m.time(), 0)).unwrap();
    // λ in units of ‖target‖²; the bank features are O(1e-2) in L²(Ω_T)
    let scale = runge_control(&m, &member, &bank[..4], &sols[..4], 1e30, RungeComponent::Value).unwrap().target_norm.powi(2);
    let p = runge_control(&m, &member, &bank[..4], &sols[..4], 1e-12 * scale, RungeComponent::Value).unwrap();
    assert!(p.residual <= 1e-8 && p.relative_residual() <= 1e-6, "{} {}", p.residual, p.relative_residual());

    let target = runge_target(&m);
    let residuals: Vec<f64> = [4, 8, 16, 32]
        .iter()
        .map(|&k| runge_control(&m, &target, &bank[..k], &sols[..k], 1e-10, RungeComponent::Value).unwrap().residual)
        .collect();
    assert!(residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{residuals:?}");

    let huge = runge_control(&m, &target, &bank[..8], &sols[..8], 1e12, RungeComponent::Value).unwrap();
    assert!(huge.coefficients.iter().all(|c| c.abs() < 1e-9));
    assert!((huge.residual - huge.target_norm).abs() <= 1e-6 * huge.target_norm);

    assert!(matches!(runge_control(&m, &target, &[], &[], 1e-10, RungeComponent::Value), Err(Error::EmptyBank)));
}

fn taylor_model() -> (Model, Coefficient) {
    let m = model(32, 0.75, 2e-3);
    let a = separable(&m, Profile::Bump { amplitude: 1.0, center: vec![0.1], radius: 0.8 }, vec![1.0]);
    (m, a)
}

#[test]
fn taylor_recovers_the_quadratic_coefficient() {
    let (m, a) = taylor_model();
    let q = Potential::zero();
    let g = Nonlinearity::monomial(a, 2);
    let oracle = SyntheticDn::new(&m, &q, &g, PicardSettings::with_tol(1e-13));
    let r = recover_g_taylor(&oracle, &q, &TaylorInversion::default(), Some(&g)).unwrap();
    let err = r.error("d2g").unwrap();
    assert!(err <= 0.05, "{err}");
    let truth = r.field("d2g").unwrap().truth.clone().unwrap();
    let peak = truth.iter().cloned().fold(0.0, f64::max);
    assert!((peak - 2.0).abs() < 0.05, "{peak}");
}

#[test]
fn taylor_sees_no_quadratic_part_in_a_cubic() {
    let (m, _) = taylor_model();
    let q = Potential::zero();
    let g = Nonlinearity::monomial(Coefficient::Constant(1.0), 3);
    let oracle = SyntheticDn::new(&m, &q, &g, PicardSettings::with_tol(1e-13));
    let r = recover_g_taylor(&oracle, &q, &TaylorInversion::default(), None).unwrap();
    let v = &r.field("d2g").unwrap().values;
    let norm = relative_l2_error(m.grid(), v, &vec![0.0; v.len()]);
    // scale: the L² norm of the quadratic coefficient 2 on Ω
    let scale = relative_l2_error(m.grid(), &mollified_indicator(m.grid()).iter().map(|c| 2.0 * c).collect::<Vec<_>>(), &vec![0.0; v.len()]);
    assert!(norm <= 1e-3 * scale, "{norm} {scale}");
}

#[test]
fn taylor_ignores_the_gaussian_damping_at_second_order() {
    let (m, a) = taylor_model();
    let q = Potential::zero();
    let g = Nonlinearity::Polynomial(PolynomialType::new(vec![PolyTerm { coeff: a.clone(), power: 2 }], Some(1)).unwrap());
    let oracle = SyntheticDn::new(&m, &q, &g, PicardSettings::with_tol(1e-13));
    let r = recover_g_taylor(&oracle, &q, &TaylorInversion::default(), None).unwrap();
    let expected = taylor_profile(&m, &Nonlinearity::monomial(a, 2), 2).unwrap();
    let err = relative_l2_error(m.grid(), &r.field("d2g").unwrap().values, &expected);
    assert!(err <= 0.05, "{err}");
}

#[test]
fn taylor_peels_the_third_order_after_the_second() {
    let (m, a) = taylor_model();
    let q = Potential::zero();
    let g = Nonlinearity::Polynomial(
        PolynomialType::new(vec![PolyTerm { coeff: a, power: 2 }, PolyTerm { coeff: Coefficient::Constant(0.5), power: 3 }], None).unwrap(),
    );
    let oracle = SyntheticDn::new(&m, &q, &g, PicardSettings::with_tol(1e-13));
    let r = recover_g_taylor(&oracle, &q, &TaylorInversion { max_order: 3, ..Default::default() }, Some(&g)).unwrap();
    assert!(r.error("d2g").unwrap() <= 0.05);
    assert!(r.error("d3g").unwrap() <= 0.10, "{:?}", r.error("d3g"));
}

#[test]
fn taylor_consistency_loop_reproduces_the_data() {
    let (m, a) = taylor_model();
    let q = Potential::zero();
    let g = Nonlinearity::monomial(a, 2);
    let settings = TaylorInversion::default();
    let oracle = SyntheticDn::new(&m, &q, &g, settings.picard);
    let r = recover_g_taylor(&oracle, &q, &settings, None).unwrap();
    let g_rec = taylor_polynomial(&[r.field("d2g").unwrap().values.clone()]);
    let again = recover_g_taylor(&SyntheticDn::new(&m, &q, &g_rec, settings.picard), &q, &settings, None).unwrap();

    // both runs steer the same datum, so their second quotients can be compared directly
    let psi = steered_input(&m, &q, &settings);
    let eta = settings.eta;
    let quotient = |o: &SyntheticDn| {
        let t = |s: f64| o.trace(&psi.scaled(s * eta)).unwrap();
        (t(2.0) - t(0.0) * 2.0 + t(-2.0)) / (4.0 * eta * eta)
    };
    let original = quotient(&oracle);
    let regenerated = quotient(&SyntheticDn::new(&m, &q, &g_rec, settings.picard));
    let residual = r.conditioning[0].residual;
    assert!((&original - &regenerated).norm() <= 2.0 * residual + 1e-12 * original.norm(), "{} {}", (&original - &regenerated).norm(), residual);
    let drift = relative_l2_error(m.grid(), &again.field("d2g").unwrap().values, &r.field("d2g").unwrap().values);
    assert!(drift <= 0.02, "{drift}");
}

fn steered_input(m: &Model, q: &Potential, s: &TaylorInversion) -> ExteriorInput {
    let g = m.grid();
    let bank = input_bank(g, g.w1(), s.bank_size, m.time().final_time(), s.bank_amplitude);
    let sols = solve_bank(m, q, &bank, Scheme::ImplicitMidpoint).unwrap();
    runge_control(m, &runge_target(m), &bank, &sols, s.runge_lambda, RungeComponent::Value).unwrap().input()
}

#[test]
fn taylor_reports_small_divisors_and_bad_orders() {
    let (m, a) = taylor_model();
    let q = Potential::zero();
    let oracle = SyntheticDn::new(&m, &q, &Nonlinearity::monomial(a, 2), PicardSettings::with_tol(1e-13));
    let strict = TaylorInversion { divisor_floor: 0.99, ..Default::default() };
    assert!(matches!(recover_g_taylor(&oracle, &q, &strict, None), Err(Error::SmallDivisor(_))));
    let low = TaylorInversion { max_order: 1, ..Default::default() };
    assert!(recover_g_taylor(&oracle, &q, &low, None).is_err());
}

fn westervelt_model() -> Model {
    model(32, 1.5, 2e-3)
}

#[test]
fn westervelt_beta_and_kappa_are_recovered() {
    let m = westervelt_model();
    let q = Potential::zero();
    let s = WesterveltInversion::default();
    let beta = Coefficient::Constant(0.1);
    let o = SyntheticDn::new(&m, &q, &Nonlinearity::WesterveltBeta(beta.clone()), s.picard);
    let e = recover_westervelt_beta(&o, &q, &s, Some(&beta)).unwrap().error("beta").unwrap();
    assert!(e <= 0.05, "beta {e}");
    let kappa = Coefficient::Constant(0.05);
    let o = SyntheticDn::new(&m, &q, &Nonlinearity::WesterveltKappa(kappa.clone()), s.picard);
    let e = recover_westervelt_kappa(&o, &q, &s, Some(&kappa)).unwrap().error("kappa").unwrap();
    assert!(e <= 0.05, "kappa {e}");
}

#[test]
fn westervelt_zero_coefficients_recover_zero() {
    let m = westervelt_model();
    let q = Potential::zero();
    let s = WesterveltInversion::default();
    for nl in [Nonlinearity::WesterveltBeta(Coefficient::Constant(0.0)), Nonlinearity::WesterveltKappa(Coefficient::Constant(0.0))] {
        let o = SyntheticDn::new(&m, &q, &nl, s.picard);
        let r = if matches!(nl, Nonlinearity::WesterveltBeta(_)) {
            recover_westervelt_beta(&o, &q, &s, None).unwrap()
        } else {
            recover_westervelt_kappa(&o, &q, &s, None).unwrap()
        };
        assert!(r.fields[0].values.iter().all(|v| v.abs() <= 1e-12), "{:?}", r.fields[0].values);
    }
}

#[test]
fn westervelt_polarization_residual_vanishes_for_equal_terms() {
    let m = westervelt_model();
    let q = Potential::zero();
    let v1 = solve_linear_mgt(&m, &q, Forcing::None, &input_w1(&m, 0, 1.0), Scheme::ImplicitMidpoint).unwrap();
    let v2 = solve_linear_mgt(&m, &q, Forcing::None, &input_w1(&m, 1, 1.0), Scheme::ImplicitMidpoint).unwrap();
    for nl in [Nonlinearity::WesterveltBeta(Coefficient::Constant(0.1)), Nonlinearity::WesterveltKappa(Coefficient::Constant(0.05))] {
        assert_eq!(polarization_residual(&m, &nl, &nl, &v1, &v2).unwrap(), 0.0);
    }
    let other = Nonlinearity::WesterveltBeta(Coefficient::Constant(0.2));
    assert!(polarization_residual(&m, &Nonlinearity::WesterveltBeta(Coefficient::Constant(0.1)), &other, &v1, &v2).unwrap() > 0.0);
}

#[test]
fn westervelt_recovery_needs_the_dimension_gate() {
    let m = model(32, 0.5, 2e-3);
    let q = Potential::zero();
    let nl = Nonlinearity::WesterveltBeta(Coefficient::Constant(0.1));
    let o = SyntheticDn::new(&m, &q, &nl, PicardSettings::default());
    assert!(matches!(recover_westervelt_beta(&o, &q, &WesterveltInversion::default(), None), Err(Error::DimensionGate { .. })));
}

fn poly(alphas: &[f64], rs: &[f64]) -> Polyhomogeneous {
    Polyhomogeneous::new(alphas.iter().zip(rs).map(|(a, r)| (Coefficient::Constant(*a), *r)).collect()).unwrap()
}

#[test]
fn polyhomogeneous_single_amplitude_and_decay_slope() {
    let m = model(32, 0.75, 2e-3);
    let q = Potential::zero();
    let p = poly(&[1.0], &[0.5]);
    let o = SyntheticDn::new(&m, &q, &Nonlinearity::Polyhomogeneous(p.clone()), PicardSettings::with_tol(1e-13));
    let r = recover_polyhomogeneous(&o, &q, &[0.5], &PolyhomogeneousInversion::default(), Some(&p)).unwrap();
    assert!(r.error("alpha_1").unwrap() <= 0.05);
    let slope = r.diagnostic("decay_slope").unwrap();
    assert!((slope - 0.5).abs() <= 0.1, "{slope}");
}

#[test]
fn polyhomogeneous_zero_amplitude_recovers_zero() {
    let m = model(32, 0.75, 2e-3);
    let q = Potential::zero();
    let o = SyntheticDn::new(&m, &q, &Nonlinearity::Polyhomogeneous(poly(&[0.0], &[0.5])), PicardSettings::with_tol(1e-13));
    let r = recover_polyhomogeneous(&o, &q, &[0.5], &PolyhomogeneousInversion::default(), None).unwrap();
    assert!(r.fields[0].values.iter().all(|v| v.abs() <= 1e-10));
}

#[test]
fn polyhomogeneous_peeling_matches_the_joint_fit() {
    let m = model(32, 0.75, 2e-3);
    let q = Potential::zero();
    let p = poly(&[1.0, 0.5], &[0.5, 1.0]);
    let o = SyntheticDn::new(&m, &q, &Nonlinearity::Polyhomogeneous(p.clone()), PicardSettings::with_tol(1e-13));
    let s = PolyhomogeneousInversion { joint_iters: 6, ..Default::default() };
    let r = recover_polyhomogeneous(&o, &q, &[0.5, 1.0], &s, Some(&p)).unwrap();
    assert!(r.error("alpha_1").unwrap() <= 0.05 && r.error("alpha_2").unwrap() <= 0.05);
    let gap = r.diagnostic("joint_gap_2").unwrap();
    assert!(gap <= 0.02, "{gap}");
}

#[test]
fn polyhomogeneous_rejects_bad_exponents() {
    let m = model(32, 0.75, 2e-3);
    let q = Potential::zero();
    let o = SyntheticDn::new(&m, &q, &Nonlinearity::Zero, PicardSettings::default());
    for rs in [vec![1.0, 0.5], vec![0.5, 1.5], vec![]] {
        let r = recover_polyhomogeneous(&o, &q, &rs, &PolyhomogeneousInversion::default(), None);
        assert!(matches!(r, Err(Error::ExponentOrderViolation(_))), "{rs:?}");
    }
}

#[test]
fn noisy_oracle_is_reproducible() {
    let m = model(32, 0.75, 2e-3);
    let q = Potential::zero();
    let g = Nonlinearity::monomial(Coefficient::Constant(1.0), 2);
    let o = SyntheticDn::new(&m, &q, &g, PicardSettings::default()).with_noise(1e-3, 7);
    let phi = input_w1(&m, 0, 1.0);
    let (a, b) = (o.trace(&phi).unwrap(), o.trace(&phi).unwrap());
    assert_eq!(a, b);
    let clean = SyntheticDn::new(&m, &q, &g, PicardSettings::default()).trace(&phi).unwrap();
    let rel = (&a - &clean).norm() / clean.norm();
    assert!(rel > 1e-5 && rel < 1e-2, "{rel}");
    let other = SyntheticDn::new(&m, &q, &g, PicardSettings::default()).with_noise(1e-3, 8).trace(&phi).unwrap();
    assert_ne!(a, other);
}

#[test]
fn report_saves_json_csv_and_fields() {
    let m = model(32, 0.75, 2e-3);
    let q = bump_potential(&m, 1.0);
    let r = recover_q(&m, &dataset(&m, &q), &Potential::zero(), &PotentialInversion { newton_iters: 1, ..Default::default() }, Some(&q)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = r.save(dir.path(), "q").unwrap();
    assert_eq!(files.len(), 3 + r.fields.len());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
    assert_eq!(json["kind"], "potential");
    let log = std::fs::read_to_string(dir.path().join("q_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);
    let errors = std::fs::read_to_string(dir.path().join("q_errors.csv")).unwrap();
    assert!(errors.lines().skip(1).all(|l| l.split(',').count() == 5));
}
