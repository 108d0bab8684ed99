use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::partition::proper_partitions;
use crate::error::{Error, Result};
use crate::forward::{Model, Nonlinearity, SampledNonlinearity};
use crate::fracgrid::{SpaceTimeField, Support};

/// ε-derivatives of the solution keyed by their sorted multi-index.
pub type DerivativeBank = BTreeMap<Vec<usize>, SpaceTimeField>;

/// Sorted copy of a multi-index.
pub fn multi_index(indices: &[usize]) -> Vec<usize> {
    let mut k = indices.to_vec();
    k.sort_unstable();
    k
}

pub(crate) fn check_order(g: &Nonlinearity, order: usize) -> Result<()> {
    if order > g.max_tau_order() {
        return Err(Error::DerivativeOrderUnsupported {
            order,
            reason: format!(
                "the nonlinearity has {} usable τ-derivatives",
                g.max_tau_order()
            ),
        });
    }
    Ok(())
}

/// `Σ_{π ∈ Π'_N} ∂^{|π|}_τ g(u) ∏_{B ∈ π} ∂^{k_B} u` on matrices laid out like `sampled`.
pub(crate) fn slashed_matrix<'a>(
    g: &Nonlinearity,
    sampled: &SampledNonlinearity<'_>,
    base: &DMatrix<f64>,
    lookup: impl Fn(&[usize]) -> Option<&'a DMatrix<f64>>,
    indices: &[usize],
) -> Result<DMatrix<f64>> {
    let n = indices.len();
    let mut out = DMatrix::zeros(base.nrows(), base.ncols());
    if n < 2 || g.is_zero() {
        return Ok(out);
    }
    check_order(g, n)?;
    let mut dg = BTreeMap::new();
    for p in proper_partitions(n)? {
        let factors = p
            .blocks()
            .iter()
            .map(|b| {
                let key = multi_index(&b.iter().map(|&j| indices[j]).collect::<Vec<_>>());
                lookup(&key).ok_or(Error::MissingDerivative(key))
            })
            .collect::<Result<Vec<_>>>()?;
        let order = p.len();
        if let std::collections::btree_map::Entry::Vacant(e) = dg.entry(order) {
            e.insert(sampled.apply(order, base)?);
        }
        let mut term = dg[&order].clone();
        for f in factors {
            term.component_mul_assign(f);
        }
        out += term;
    }
    Ok(out)
}

/// The slashed Faà di Bruno source `∂̸^{N-1}_ε g(u^ε)` at time levels, for `N = indices.len()`.
///
/// `base` is `u^ε` and `bank` holds the lower-order ε-derivatives. Only Ω rows are used.
pub fn faa_di_bruno_source(
    model: &Model,
    g: &Nonlinearity,
    base: &SpaceTimeField,
    bank: &DerivativeBank,
    indices: &[usize],
) -> Result<SpaceTimeField> {
    let sampled = g.sample(model.grid(), model.time(), false);
    let compact: BTreeMap<&Vec<usize>, DMatrix<f64>> = bank
        .iter()
        .map(|(k, f)| (k, f.rows(model.grid().omega())))
        .collect();
    let m = slashed_matrix(
        g,
        &sampled,
        &base.rows(model.grid().omega()),
        |k| compact.get(&k.to_vec()),
        indices,
    )?;
    let mut values = DMatrix::zeros(model.grid().len(), m.ncols());
    for (i, &node) in model.grid().omega().iter().enumerate() {
        values.set_row(node, &m.row(i));
    }
    Ok(SpaceTimeField::from_values(
        values,
        base.dt(),
        Support::Omega,
    ))
}
