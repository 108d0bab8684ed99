use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::coefficient::Coefficient;
use super::exterior::{ExteriorInput, Lift};
use super::params::{MgtParams, Scheme, TimeGrid};
use crate::error::{Error, Result};
use crate::fracgrid::{FracOp, Grid, SpaceTimeField, Support};

/// Grid, operator, equation constants and time grid shared by every solve.
#[derive(Clone, Debug)]
pub struct Model {
    grid: Grid,
    op: FracOp,
    params: MgtParams,
    time: TimeGrid,
    a_omega: DMatrix<f64>,
}

impl Model {
    pub fn new(grid: Grid, op: FracOp, params: MgtParams, time: TimeGrid) -> Result<Self> {
        params.validate()?;
        if op.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("operator on {} nodes", grid.len()),
                got: format!("{}", op.len()),
            });
        }
        let a_omega = op.block(grid.omega(), grid.omega());
        Ok(Model {
            grid,
            op,
            params,
            time,
            a_omega,
        })
    }

    /// One-dimensional setup on `[-L, L]` with Ω = (-1, 1) and windows of `window` nodes.
    pub fn interval(
        n: usize,
        half_width: f64,
        window: usize,
        s: f64,
        params: MgtParams,
        time: TimeGrid,
    ) -> Result<Self> {
        let grid = Grid::interval(half_width, n, window)?;
        let op = FracOp::new(&grid, s)?;
        Model::new(grid, op, params, time)
    }

    /// Same spatial setup on another time grid.
    pub fn with_time(&self, time: TimeGrid) -> Self {
        Model {
            time,
            ..self.clone()
        }
    }

    pub fn with_params(&self, params: MgtParams) -> Result<Self> {
        params.validate()?;
        Ok(Model {
            params,
            ..self.clone()
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn op(&self) -> &FracOp {
        &self.op
    }

    pub fn params(&self) -> &MgtParams {
        &self.params
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    /// `A_s` restricted to Ω × Ω.
    pub fn a_omega(&self) -> &DMatrix<f64> {
        &self.a_omega
    }

    /// Number of Ω nodes.
    pub fn m(&self) -> usize {
        self.a_omega.nrows()
    }

    pub(crate) fn compact(&self, f: &SpaceTimeField) -> DMatrix<f64> {
        f.rows(self.grid.omega())
    }

    pub(crate) fn expand(&self, c: &DMatrix<f64>) -> SpaceTimeField {
        let mut values = DMatrix::zeros(self.grid.len(), c.ncols());
        for (i, &node) in self.grid.omega().iter().enumerate() {
            values.set_row(node, &c.row(i));
        }
        SpaceTimeField::from_values(values, self.time.dt, Support::Omega)
    }

    /// `max_n √(h^d) (‖a_n‖ + ‖A^{s/2} v_n‖ + ‖A^{s/2} u_n‖)` over compact Ω columns.
    pub(crate) fn x_norm_compact(
        &self,
        u: &DMatrix<f64>,
        v: &DMatrix<f64>,
        a: &DMatrix<f64>,
    ) -> f64 {
        let au = &self.a_omega * u;
        let av = &self.a_omega * v;
        let w = self.grid.cell().sqrt();
        (0..u.ncols())
            .map(|n| {
                let e = a.column(n).norm()
                    + v.column(n).dot(&av.column(n)).max(0.0).sqrt()
                    + u.column(n).dot(&au.column(n)).max(0.0).sqrt();
                w * e
            })
            .fold(0.0, f64::max)
    }
}

/// Zeroth-order coefficient `q(x, t)` on Ω.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    coeff: Coefficient,
    time_reversal_invariant: bool,
    /// Integrability exponent carried along for reports; not used by the solvers.
    pub p_exponent: Option<f64>,
}

impl Potential {
    pub fn zero() -> Self {
        Potential {
            coeff: Coefficient::Constant(0.0),
            time_reversal_invariant: true,
            p_exponent: None,
        }
    }

    /// A potential; when flagged as time-reversal invariant the flag is verified on the time grid.
    pub fn new(
        coeff: Coefficient,
        time_reversal_invariant: bool,
        grid: &Grid,
        time: &TimeGrid,
    ) -> Result<Self> {
        let q = Potential {
            coeff,
            time_reversal_invariant,
            p_exponent: None,
        };
        if time_reversal_invariant
            && !q
                .coeff
                .to_field(grid, time)
                .is_time_reversal_invariant(1e-12)
        {
            return Err(Error::InvalidParameter(
                "potential flagged time-reversal invariant is not".into(),
            ));
        }
        Ok(q)
    }

    /// Time-independent potential from Ω node values (box-length vector).
    pub fn stationary(profile: Vec<f64>) -> Self {
        Potential {
            coeff: Coefficient::Separable {
                profile,
                poly: vec![1.0],
            },
            time_reversal_invariant: true,
            p_exponent: None,
        }
    }

    pub fn coeff(&self) -> &Coefficient {
        &self.coeff
    }

    pub fn is_time_reversal_invariant(&self) -> bool {
        self.time_reversal_invariant
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    /// `q⋆(t) = q(T - t)`.
    pub fn time_reversed(&self, grid: &Grid, time: &TimeGrid) -> Self {
        if self.time_reversal_invariant || self.coeff.is_static() {
            return self.clone();
        }
        let coeff = match &self.coeff {
            Coefficient::Separable { profile, poly } => Coefficient::Separable {
                profile: profile.clone(),
                poly: reflect_poly(poly, time.final_time()),
            },
            other => Coefficient::Sampled(other.to_field(grid, time).time_reversed()),
        };
        Potential {
            coeff,
            ..self.clone()
        }
    }

    pub fn to_field(&self, grid: &Grid, time: &TimeGrid) -> SpaceTimeField {
        self.coeff.to_field(grid, time)
    }

    /// `self + other` as a sampled field.
    pub fn plus(&self, other: &Potential, grid: &Grid, time: &TimeGrid) -> Result<Self> {
        let f = self.to_field(grid, time).add(&other.to_field(grid, time))?;
        Ok(Potential {
            coeff: Coefficient::Sampled(f),
            time_reversal_invariant: false,
            p_exponent: self.p_exponent,
        })
    }
}

/// Coefficients of `p(T - t)`.
#[allow(clippy::needless_range_loop)]
fn reflect_poly(p: &[f64], final_time: f64) -> Vec<f64> {
    let mut out = vec![0.0; p.len()];
    for (k, &c) in p.iter().enumerate() {
        // (T - t)^k = Σ_j C(k, j) T^{k-j} (-t)^j
        let mut binom = 1.0;
        for j in 0..=k {
            out[j] +=
                c * binom * final_time.powi((k - j) as i32) * if j % 2 == 0 { 1.0 } else { -1.0 };
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    out
}

/// Interior source term `F` on Ω.
#[derive(Clone, Copy)]
pub enum Forcing<'a> {
    None,
    /// Node samples; midpoint values are averages of neighbouring levels.
    Field(&'a SpaceTimeField),
    /// `t ↦ F(t)` on Ω nodes (compact ordering).
    Function(&'a (dyn Fn(f64) -> DVector<f64> + Sync)),
}

impl Forcing<'_> {
    /// Midpoint samples (m × steps) and node samples (m × (steps + 1)).
    pub(crate) fn samples(&self, model: &Model) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = model.m();
        let time = model.time();
        match self {
            Forcing::None => (
                DMatrix::zeros(m, time.steps),
                DMatrix::zeros(m, time.steps + 1),
            ),
            Forcing::Field(f) => {
                let nodes = model.compact(f);
                let mid = DMatrix::from_fn(m, time.steps, |i, n| {
                    0.5 * (nodes[(i, n)] + nodes[(i, n + 1)])
                });
                (mid, nodes)
            }
            Forcing::Function(f) => {
                let mut mid = DMatrix::zeros(m, time.steps);
                let mut nodes = DMatrix::zeros(m, time.steps + 1);
                for n in 0..time.steps {
                    mid.set_column(n, &f(time.t_mid(n)));
                }
                for n in 0..=time.steps {
                    nodes.set_column(n, &f(time.t(n)));
                }
                (mid, nodes)
            }
        }
    }
}

/// Forcing plus the exterior lift, sampled for the integrator.
pub(crate) fn total_drive(
    model: &Model,
    forcing: Forcing<'_>,
    phi: &ExteriorInput,
    reg: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (mut mid, mut nodes) = forcing.samples(model);
    let lift = Lift::new(phi, model.grid(), model.op());
    if !lift.is_zero() {
        let time = model.time();
        for n in 0..time.steps {
            let s = lift.source_at(model.params(), reg, time.t_mid(n));
            let mut col = mid.column_mut(n);
            col += s;
        }
        for n in 0..=time.steps {
            let s = lift.source_at(model.params(), reg, time.t(n));
            let mut col = nodes.column_mut(n);
            col += s;
        }
    }
    (mid, nodes)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SolveInfo {
    pub scheme: Scheme,
    pub iterations: usize,
    pub contraction_ratios: Vec<f64>,
    pub regularization: f64,
}

/// `(u, ∂ₜu, ∂ₜ²u)` of the homogeneous part on Ω together with the exterior datum.
#[derive(Clone, Debug)]
pub struct StateTrajectory {
    pub u: SpaceTimeField,
    pub ut: SpaceTimeField,
    pub utt: SpaceTimeField,
    pub phi: ExteriorInput,
    pub info: SolveInfo,
}

impl StateTrajectory {
    pub(crate) fn from_compact(
        model: &Model,
        c: &Compact,
        phi: ExteriorInput,
        info: SolveInfo,
    ) -> Self {
        StateTrajectory {
            u: model.expand(&c.u),
            ut: model.expand(&c.v),
            utt: model.expand(&c.a),
            phi,
            info,
        }
    }

    pub(crate) fn to_compact(&self, model: &Model) -> Compact {
        Compact {
            u: model.compact(&self.u),
            v: model.compact(&self.ut),
            a: model.compact(&self.utt),
        }
    }

    pub fn steps(&self) -> usize {
        self.u.steps()
    }

    /// Full solution `u + φ` at level `n`; exterior entries are exactly `φ`.
    pub fn full(&self, model: &Model, n: usize, order: usize) -> DVector<f64> {
        let hom = match order {
            0 => &self.u,
            1 => &self.ut,
            _ => &self.utt,
        };
        hom.column(n) + self.phi.at(model.grid().len(), model.time().t(n), order)
    }

    pub fn full_field(&self, model: &Model, order: usize) -> SpaceTimeField {
        let hom = match order {
            0 => &self.u,
            1 => &self.ut,
            _ => &self.utt,
        };
        let ext = self.phi.field(model.grid(), model.time(), order);
        SpaceTimeField::from_values(hom.values() + ext.values(), model.time().dt, Support::Box)
    }

    /// Discrete X-norm of the homogeneous part.
    pub fn x_norm(&self, model: &Model) -> f64 {
        let c = self.to_compact(model);
        model.x_norm_compact(&c.u, &c.v, &c.a)
    }

    /// X-norm of `self - other` (homogeneous parts).
    pub fn x_distance(&self, other: &StateTrajectory, model: &Model) -> f64 {
        let a = self.to_compact(model);
        let b = other.to_compact(model);
        model.x_norm_compact(&(&a.u - &b.u), &(&a.v - &b.v), &(&a.a - &b.a))
    }
}

/// Compact Ω-row storage used by the integrators.
#[derive(Clone, Debug)]
pub(crate) struct Compact {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

impl Compact {
    pub fn zeros(m: usize, steps: usize) -> Self {
        Compact {
            u: DMatrix::zeros(m, steps + 1),
            v: DMatrix::zeros(m, steps + 1),
            a: DMatrix::zeros(m, steps + 1),
        }
    }

    /// Averages of consecutive levels.
    pub fn midpoints(x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols() - 1, |i, n| {
            0.5 * (x[(i, n)] + x[(i, n + 1)])
        })
    }
}
