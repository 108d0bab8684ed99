#![allow(dead_code)]

use mgtlab::forward::{
    Coefficient, Envelope, ExteriorInput, MgtParams, Model, Potential, Profile, TimeGrid,
};

pub fn model(n: usize, s: f64, dt: f64) -> Model {
    Model::interval(
        n,
        2.0,
        5,
        s,
        MgtParams::default(),
        TimeGrid::new(1.0, dt).unwrap(),
    )
    .unwrap()
}

pub fn bump_potential(model: &Model, amplitude: f64) -> Potential {
    let profile = Profile::Bump {
        amplitude,
        center: vec![0.1],
        radius: 0.8,
    };
    Potential::stationary(profile.on_omega(model.grid()))
}

pub fn input_w1(model: &Model, mode: usize, amplitude: f64) -> ExteriorInput {
    ExteriorInput::window_mode(
        model.grid(),
        model.grid().w1(),
        mode,
        Envelope::SinPower {
            t0: 0.0,
            t1: 1.0,
            k: 4,
        },
        amplitude,
    )
}

pub fn input_w2(model: &Model, mode: usize, amplitude: f64) -> ExteriorInput {
    ExteriorInput::window_mode(
        model.grid(),
        model.grid().w2(),
        mode,
        Envelope::SinPower {
            t0: 0.0,
            t1: 1.0,
            k: 4,
        },
        amplitude,
    )
}

pub fn separable(model: &Model, profile: Profile, poly: Vec<f64>) -> Coefficient {
    Coefficient::separable(model.grid(), &profile, poly)
}

/// Least-squares slope of log(err) against log(x).
pub fn slope(x: &[f64], err: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

/// Coefficients of a multilinear polynomial in `n` nilpotent variables, indexed by subset mask.
pub fn multilinear_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for s in 0..a.len() {
        let mut sub = s;
        loop {
            out[s] += a[sub] * b[s & !sub];
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & s;
        }
    }
    out
}

/// Coefficient of `δ₁⋯δ_N` in `Σ_p c_p U^p` where `U = Σ_S δ^S d[S]` with `d[full]` dropped.
///
/// This is the mixed derivative of `g(u(ε))` minus the `∂_τg · ∂^N u` term, computed by
/// truncated power-series multiplication instead of partitions.
pub fn slashed_by_expansion(poly: &[(u32, f64)], d: &[f64]) -> f64 {
    let full = d.len() - 1;
    let mut u = d.to_vec();
    u[full] = 0.0;
    let mut total = 0.0;
    for &(p, c) in poly {
        let mut pow = vec![0.0; d.len()];
        pow[0] = 1.0;
        for _ in 0..p {
            pow = multilinear_mul(&pow, &u);
        }
        total += c * pow[full];
    }
    total
}
