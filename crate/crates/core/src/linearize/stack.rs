use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::source::{check_order, multi_index, slashed_matrix, DerivativeBank};
use crate::error::{Error, Result};
use crate::forward::stepper::{PotentialSamples, Stepper};
use crate::forward::{
    solve_semilinear_mgt, total_drive, Compact, ExteriorInput, Forcing, Model, Nonlinearity,
    PicardSettings, Potential, Scheme, SolveInfo, StateTrajectory,
};

/// Solution `u^ε` for `ε·φ = Σ ε_k φ_k` together with its ε-derivatives up to a fixed order.
#[derive(Clone, Debug)]
pub struct LinearizationStack {
    eps: Vec<f64>,
    bank: Vec<ExteriorInput>,
    base: StateTrajectory,
    derivatives: BTreeMap<Vec<usize>, StateTrajectory>,
    mid: BTreeMap<Vec<usize>, DMatrix<f64>>,
    nodes: BTreeMap<Vec<usize>, DMatrix<f64>>,
    settings: PicardSettings,
}

/// Nondecreasing index sequences of length `order` over `0..m`.
pub fn multi_indices(m: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, order: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == order {
            out.push(cur.clone());
            return;
        }
        for k in start..m {
            cur.push(k);
            rec(m, order, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, order, 0, &mut Vec::new(), &mut out);
    out
}

/// Solves `(L + q + ∂_τg(u^ε))v = source` for every derivative of one stack.
struct Linearizer<'a> {
    model: &'a Model,
    g: &'a Nonlinearity,
    stepper: Stepper<'a>,
    base_mid: DMatrix<f64>,
    base_nodes: DMatrix<f64>,
    scheme: Scheme,
}

impl<'a> Linearizer<'a> {
    fn new(
        model: &'a Model,
        q: &Potential,
        g: &'a Nonlinearity,
        base: &StateTrajectory,
        scheme: Scheme,
    ) -> Result<Self> {
        let c = base.to_compact(model);
        let base_mid = Compact::midpoints(&c.u);
        let base_nodes = c.u;
        let mut pot = PotentialSamples::from_potential(model, q);
        if !g.is_zero() {
            check_order(g, 1)?;
            let d_mid = g
                .sample(model.grid(), model.time(), true)
                .apply(1, &base_mid)?;
            let d_nodes = g
                .sample(model.grid(), model.time(), false)
                .apply(1, &base_nodes)?;
            if d_mid.amax() > 0.0 || d_nodes.amax() > 0.0 {
                pot = pot.plus(&d_mid, &d_nodes);
            }
        }
        Ok(Linearizer {
            model,
            g,
            stepper: Stepper::new(model, 0.0, pot, scheme),
            base_mid,
            base_nodes,
            scheme,
        })
    }

    fn solve(
        &self,
        indices: &[usize],
        bank: &[ExteriorInput],
        mid: &BTreeMap<Vec<usize>, DMatrix<f64>>,
        nodes: &BTreeMap<Vec<usize>, DMatrix<f64>>,
    ) -> Result<StateTrajectory> {
        let model = self.model;
        let (phi, src_mid, src_nodes) = if indices.len() == 1 {
            let phi = bank.get(indices[0]).ok_or(Error::EmptyBank)?.clone();
            let (m, n) = total_drive(model, Forcing::None, &phi, 0.0);
            (phi, m, n)
        } else {
            let s_mid = slashed_matrix(
                self.g,
                &self.g.sample(model.grid(), model.time(), true),
                &self.base_mid,
                |k| mid.get(k),
                indices,
            )?;
            let s_nodes = if self.scheme == Scheme::Rk4 {
                slashed_matrix(
                    self.g,
                    &self.g.sample(model.grid(), model.time(), false),
                    &self.base_nodes,
                    |k| nodes.get(k),
                    indices,
                )?
            } else {
                DMatrix::zeros(model.m(), model.time().steps + 1)
            };
            (ExteriorInput::zero(), -s_mid, -s_nodes)
        };
        let c = self.stepper.run(&src_mid, &src_nodes)?;
        let info = SolveInfo {
            scheme: self.scheme,
            iterations: 1,
            contraction_ratios: Vec::new(),
            regularization: 0.0,
        };
        Ok(StateTrajectory::from_compact(model, &c, phi, info))
    }
}

impl LinearizationStack {
    /// Solves for `u^ε` and all derivatives `∂^α_ε u^ε` with `1 ≤ |α| ≤ max_order`.
    pub fn build(
        model: &Model,
        q: &Potential,
        g: &Nonlinearity,
        bank: &[ExteriorInput],
        eps: &[f64],
        max_order: usize,
        settings: PicardSettings,
    ) -> Result<Self> {
        if bank.is_empty() {
            return Err(Error::EmptyBank);
        }
        if eps.len() != bank.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} amplitudes", bank.len()),
                got: format!("{}", eps.len()),
            });
        }
        if max_order > 1 {
            check_order(g, max_order)?;
        }
        let phi = ExteriorInput::combination(bank, eps);
        let base = solve_semilinear_mgt(model, q, g, &phi, Forcing::None, settings)?;
        let mut stack = LinearizationStack {
            eps: eps.to_vec(),
            bank: bank.to_vec(),
            base,
            derivatives: BTreeMap::new(),
            mid: BTreeMap::new(),
            nodes: BTreeMap::new(),
            settings,
        };
        let lin = Linearizer::new(model, q, g, &stack.base, settings.scheme)?;
        for order in 1..=max_order {
            let keys = multi_indices(bank.len(), order);
            let solved = keys
                .par_iter()
                .map(|k| lin.solve(k, &stack.bank, &stack.mid, &stack.nodes))
                .collect::<Result<Vec<_>>>()?;
            for (k, traj) in keys.into_iter().zip(solved) {
                stack.insert(model, k, traj);
            }
        }
        Ok(stack)
    }

    fn insert(&mut self, model: &Model, key: Vec<usize>, traj: StateTrajectory) {
        let c = traj.to_compact(model);
        self.mid.insert(key.clone(), Compact::midpoints(&c.u));
        self.nodes.insert(key.clone(), c.u);
        self.derivatives.insert(key, traj);
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn bank(&self) -> &[ExteriorInput] {
        &self.bank
    }

    pub fn settings(&self) -> PicardSettings {
        self.settings
    }

    /// `u^ε`, the order-zero entry.
    pub fn base(&self) -> &StateTrajectory {
        &self.base
    }

    /// `∂^α_ε u^ε` for the multi-index given in any order.
    pub fn derivative(&self, indices: &[usize]) -> Option<&StateTrajectory> {
        self.derivatives.get(&multi_index(indices))
    }

    pub fn max_order(&self) -> usize {
        self.derivatives.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// The `u`-components of all stored derivatives.
    pub fn derivative_bank(&self) -> DerivativeBank {
        self.derivatives
            .iter()
            .map(|(k, t)| (k.clone(), t.u.clone()))
            .collect()
    }
}

/// `∂^N_ε u^ε` for `N = indices.len()`, using the lower orders held by `stack`.
///
/// Order one carries the exterior datum `φ_k`; higher orders have zero exterior data and the
/// source `-∂̸^{N-1}_ε g(u^ε)`.
pub fn solve_linearized(
    model: &Model,
    q: &Potential,
    g: &Nonlinearity,
    stack: &LinearizationStack,
    indices: &[usize],
) -> Result<StateTrajectory> {
    if indices.is_empty() {
        return Err(Error::InvalidParameter("empty multi-index".into()));
    }
    check_order(g, indices.len().max(1))?;
    let lin = Linearizer::new(model, q, g, &stack.base, stack.settings.scheme)?;
    lin.solve(&multi_index(indices), &stack.bank, &stack.mid, &stack.nodes)
}
