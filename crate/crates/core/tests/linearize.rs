#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use mgtlab::dnmap::{dn_pairing, reversed_test_field};
use mgtlab::forward::*;
use mgtlab::fracgrid::{SpaceTimeField, Support};
use mgtlab::linearize::*;
use mgtlab::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn settings() -> PicardSettings {
    PicardSettings::with_tol(1e-13)
}

fn bank(m: &Model, amplitude: f64) -> Vec<ExteriorInput> {
    vec![input_w1(m, 0, amplitude), input_w1(m, 1, amplitude)]
}

fn random_field(m: &Model, rng: &mut ChaCha8Rng) -> SpaceTimeField {
    SpaceTimeField::from_fn(
        m.grid(),
        m.time().steps,
        m.time().dt,
        Support::Omega,
        |_, _| rng.gen_range(-1.0..1.0),
    )
}

#[test]
fn faa_di_bruno_matches_expansion_oracle() {
    let m = model(31, 0.75, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let profile: Vec<f64> = (0..m.grid().len())
        .map(|i| {
            if m.grid().in_omega(i) {
                rng.gen_range(0.5..1.5)
            } else {
                0.0
            }
        })
        .collect();
    let poly_t = vec![1.0, 0.5];
    let g = Nonlinearity::Polynomial(
        PolynomialType::new(
            vec![
                PolyTerm {
                    coeff: Coefficient::Separable {
                        profile: profile.clone(),
                        poly: poly_t.clone(),
                    },
                    power: 2,
                },
                PolyTerm {
                    coeff: Coefficient::Constant(-0.7),
                    power: 3,
                },
                PolyTerm {
                    coeff: Coefficient::Constant(0.3),
                    power: 4,
                },
                PolyTerm {
                    coeff: Coefficient::Constant(0.2),
                    power: 5,
                },
            ],
            None,
        )
        .unwrap(),
    );
    for indices in [
        vec![0, 1],
        vec![1, 1],
        vec![0, 0, 1],
        vec![0, 1, 2],
        vec![2, 0, 1, 1],
        vec![0, 0, 0, 0],
    ] {
        let n = indices.len();
        let base = random_field(&m, &mut rng);
        let mut bank = DerivativeBank::new();
        for mask in 1..(1usize << n) - 1 {
            let key = multi_index(
                &(0..n)
                    .filter(|j| mask >> j & 1 == 1)
                    .map(|j| indices[j])
                    .collect::<Vec<_>>(),
            );
            bank.entry(key)
                .or_insert_with(|| random_field(&m, &mut rng));
        }
        let src = faa_di_bruno_source(&m, &g, &base, &bank, &indices).unwrap();
        let mut worst = 0.0f64;
        for &node in m.grid().omega() {
            for step in 0..=m.time().steps {
                let t = m.time().t(step);
                let a = profile[node] * (poly_t[0] + poly_t[1] * t);
                let u0 = base.values()[(node, step)];
                // Taylor-shift g around u0: Σ_p c_p (u0 + U)^p expanded in U
                let mut shifted = vec![(0u32, 0.0); 0];
                for (p, c) in [(2u32, a), (3, -0.7), (4, 0.3), (5, 0.2)] {
                    for j in 1..=p {
                        let binom =
                            (0..j).fold(1.0, |acc, i| acc * (p - i) as f64 / (i + 1) as f64);
                        shifted.push((j, c * binom * u0.powi((p - j) as i32)));
                    }
                }
                let mut d = vec![0.0; 1 << n];
                for mask in 1..(1usize << n) - 1 {
                    let key = multi_index(
                        &(0..n)
                            .filter(|j| mask >> j & 1 == 1)
                            .map(|j| indices[j])
                            .collect::<Vec<_>>(),
                    );
                    d[mask] = bank[&key].values()[(node, step)];
                }
                let expect = slashed_by_expansion(&shifted, &d);
                let got = src.values()[(node, step)];
                worst = worst.max((got - expect).abs() / expect.abs().max(1.0));
            }
        }
        assert!(worst <= 1e-10, "{indices:?}: {worst:e}");
    }
}

#[test]
fn faa_di_bruno_closed_forms() {
    let m = model(31, 0.75, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v: Vec<SpaceTimeField> = (0..3).map(|_| random_field(&m, &mut rng)).collect();
    let zero = SpaceTimeField::zeros(m.grid().len(), m.time().steps, m.time().dt, Support::Omega);
    let mut bank = DerivativeBank::new();
    for k in 0..3 {
        bank.insert(vec![k], v[k].clone());
    }
    for key in [vec![0, 1], vec![0, 2], vec![1, 2]] {
        bank.insert(key, random_field(&m, &mut rng));
    }
    // u³ at u = 0: only the three-block partition survives
    let cubic = Nonlinearity::monomial(Coefficient::Constant(1.0), 3);
    let s = faa_di_bruno_source(&m, &cubic, &zero, &bank, &[0, 1, 2]).unwrap();
    let expect = v[0]
        .values()
        .component_mul(v[1].values())
        .component_mul(v[2].values())
        * 6.0;
    assert!((s.values() - expect).amax() <= 1e-14);
    // second order: ∂²g(u) v_k v_l
    let quad = Nonlinearity::monomial(Coefficient::Constant(0.4), 2);
    let s = faa_di_bruno_source(&m, &quad, &v[2], &bank, &[0, 1]).unwrap();
    let expect = v[0].values().component_mul(v[1].values()) * 0.8;
    assert!((s.values() - expect).amax() <= 1e-14);
    // linear g: no source at any order
    let lin = Nonlinearity::monomial(Coefficient::Constant(2.0), 1);
    for idx in [vec![0, 1], vec![0, 1, 2]] {
        assert_eq!(
            faa_di_bruno_source(&m, &lin, &v[0], &bank, &idx)
                .unwrap()
                .max_abs(),
            0.0
        );
    }
    let missing = faa_di_bruno_source(&m, &cubic, &zero, &DerivativeBank::new(), &[0, 1]);
    assert!(matches!(missing, Err(Error::MissingDerivative(_))));
}

#[test]
fn first_order_at_zero_is_the_potential_problem() {
    let m = model(31, 0.75, 2e-3);
    let q = bump_potential(&m, 1.0);
    let b = bank(&m, 100.0);
    let cubic = Nonlinearity::monomial(Coefficient::Constant(1.0), 3);
    let quad = Nonlinearity::monomial(Coefficient::Constant(2.0), 2);
    let s1 = LinearizationStack::build(&m, &q, &cubic, &b, &[0.0, 0.0], 1, settings()).unwrap();
    let s2 = LinearizationStack::build(&m, &q, &quad, &b, &[0.0, 0.0], 1, settings()).unwrap();
    for k in 0..2 {
        let lin = solve_linear_mgt(&m, &q, Forcing::None, &b[k], Scheme::ImplicitMidpoint).unwrap();
        let v = s1.derivative(&[k]).unwrap();
        assert!(v.x_distance(&lin, &m) <= 1e-12 * lin.x_norm(&m));
        assert_eq!(v.u, s2.derivative(&[k]).unwrap().u);
    }
    assert_eq!(s1.base().u.max_abs(), 0.0);
}

#[test]
fn second_order_sources() {
    let m = model(31, 0.75, 2e-3);
    let q = bump_potential(&m, 1.0);
    let b = bank(&m, 100.0);
    let stack =
        LinearizationStack::build(&m, &q, &Nonlinearity::Zero, &b, &[0.5, 0.5], 2, settings())
            .unwrap();
    assert_eq!(stack.derivative(&[0, 1]).unwrap().u.max_abs(), 0.0);

    // g = a u² at ε = 0: source -2a v_k v_l, assembled here through an interior forcing field
    let a = 0.3;
    let quad = Nonlinearity::monomial(Coefficient::Constant(a), 2);
    let stack = LinearizationStack::build(&m, &q, &quad, &b, &[0.0, 0.0], 2, settings()).unwrap();
    let vk = stack.derivative(&[0]).unwrap().u.values().clone();
    let vl = stack.derivative(&[1]).unwrap().u.values().clone();
    let f = SpaceTimeField::from_values(
        vk.component_mul(&vl) * (-2.0 * a),
        m.time().dt,
        Support::Omega,
    );
    let direct = solve_linear_mgt(
        &m,
        &q,
        Forcing::Field(&f),
        &ExteriorInput::zero(),
        Scheme::ImplicitMidpoint,
    )
    .unwrap();
    let w = solve_linearized(&m, &q, &quad, &stack, &[1, 0]).unwrap();
    let rel = w.x_distance(&direct, &m) / direct.x_norm(&m);
    assert!(rel <= 1e-4, "{rel:e}");
    assert_eq!(w.u, stack.derivative(&[0, 1]).unwrap().u);
}

#[test]
fn quotients_of_affine_maps_are_exact() {
    let m = model(31, 0.75, 2e-3);
    let q = bump_potential(&m, 1.0);
    let b = bank(&m, 1.0);
    let lin = Nonlinearity::monomial(Coefficient::Constant(0.5), 1);
    let stack = LinearizationStack::build(&m, &q, &lin, &b, &[0.3, 0.2], 1, settings()).unwrap();
    let v = stack.derivative(&[1]).unwrap();
    for eta in [1e-1, 1e-3] {
        for kind in [QuotientKind::OneSided, QuotientKind::Central] {
            let d = diff_quotient_solution_map(
                &m,
                &q,
                &lin,
                &b,
                &[0.3, 0.2],
                &[1],
                eta,
                kind,
                settings(),
            )
            .unwrap();
            assert!(d.x_distance(v, &m) <= 1e-9 * v.x_norm(&m), "{eta} {kind:?}");
        }
    }
}

#[test]
fn quotient_ladders_for_cubic_nonlinearity() {
    let m = model(31, 0.75, 2e-3);
    let q = bump_potential(&m, 1.0);
    let b = bank(&m, 100.0);
    let g = Nonlinearity::monomial(Coefficient::Constant(1.0), 3);
    let eps = [1.0, 0.5];
    let stack = LinearizationStack::build(&m, &q, &g, &b, &eps, 2, settings()).unwrap();
    let etas = default_eta_ladder(1.0);
    for (idx, kind, lo) in [
        (vec![0], QuotientKind::OneSided, 0.8),
        (vec![0], QuotientKind::Central, 1.8),
        (vec![0, 1], QuotientKind::OneSided, 0.8),
        (vec![0, 1], QuotientKind::Central, 1.8),
    ] {
        let r = linearization_convergence_report(&m, &q, &g, &stack, &idx, &etas, kind).unwrap();
        assert!(r.is_monotone(), "{r:?}");
        assert!(r.fit.slope >= lo && r.fit.slope <= lo + 0.4, "{r:?}");
        assert!(r.to_csv().starts_with("order,indices,eta,error,slope\n"));
    }
}

#[test]
fn second_quotients_vanish_when_the_second_derivative_does() {
    let m = model(31, 0.75, 2e-3);
    let q = bump_potential(&m, 1.0);
    let b = bank(&m, 100.0);
    let g = Nonlinearity::monomial(Coefficient::Constant(1.0), 3);
    let stack = LinearizationStack::build(&m, &q, &g, &b, &[0.0, 0.0], 2, settings()).unwrap();
    assert_eq!(stack.derivative(&[0, 1]).unwrap().u.max_abs(), 0.0);
    // the central stencil cancels odd maps exactly; the one-sided one converges
    let c = linearization_convergence_report(
        &m,
        &q,
        &g,
        &stack,
        &[0, 1],
        &default_eta_ladder(1.0),
        QuotientKind::Central,
    )
    .unwrap();
    assert!(!c.relative);
    assert!(c.rows.iter().all(|r| r.error <= 1e-10), "{c:?}");
    let r = linearization_convergence_report(
        &m,
        &q,
        &g,
        &stack,
        &[0, 1],
        &default_eta_ladder(1.0),
        QuotientKind::OneSided,
    )
    .unwrap();
    assert!(r.is_monotone(), "{r:?}");
}

#[test]
fn dn_derivatives() {
    let m = model(31, 0.75, 2e-3);
    let q = bump_potential(&m, 1.0);
    let b = bank(&m, 100.0);
    let psi = input_w2(&m, 0, 1.0);
    let g = Nonlinearity::monomial(Coefficient::Constant(1.0), 3);
    let d1 = dn_derivative(&m, &q, &g, &b, &[0], &psi, 1e-2, settings()).unwrap();
    let lin = solve_linear_mgt(&m, &q, Forcing::None, &b[0], Scheme::ImplicitMidpoint).unwrap();
    let direct = dn_pairing(&m, &lin, &reversed_test_field(&m, &psi)).unwrap();
    assert!((d1.linearized - direct).abs() <= 1e-8 * direct.abs().max(1.0));
    let d2 = dn_derivative(
        &m,
        &q,
        &Nonlinearity::Zero,
        &b,
        &[0, 1],
        &psi,
        1e-2,
        settings(),
    )
    .unwrap();
    assert_eq!(d2.linearized, 0.0);

    let quad = Nonlinearity::monomial(Coefficient::Constant(1.0), 2);
    let etas = [0.8, 0.4, 0.2, 0.1];
    let mis: Vec<f64> = etas
        .iter()
        .map(|&eta| {
            let d = dn_derivative(&m, &q, &quad, &b, &[0, 1], &psi, eta, settings()).unwrap();
            d.mismatch
        })
        .collect();
    assert!(mis.windows(2).all(|w| w[1] < w[0]), "{mis:?}");
    assert!(slope(&etas, &mis) >= 1.0, "{mis:?}");
}

#[test]
fn unsupported_orders() {
    let m = model(31, 0.75, 1e-2);
    let b = bank(&m, 1.0);
    let ph = Nonlinearity::Polyhomogeneous(
        Polyhomogeneous::new(vec![(Coefficient::Constant(1.0), 0.5)]).unwrap(),
    );
    let r = LinearizationStack::build(&m, &Potential::zero(), &ph, &b, &[0.0, 0.0], 2, settings());
    assert!(matches!(r, Err(Error::DerivativeOrderUnsupported { .. })));
    assert!(matches!(
        enumerate_partitions(9),
        Err(Error::OrderTooLarge(9))
    ));
}
