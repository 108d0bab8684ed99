//! Reconstruction algorithms built on the DN map and its ε-derivatives.

mod bank;
mod basis;
mod columns;
mod lsq;
mod oracle;
mod polyhomogeneous;
mod potential;
mod report;
mod runge;
mod taylor;
mod westervelt;

pub use bank::{input_bank, solve_bank};
pub use basis::{inner_nodes, mollified_indicator, relative_l2_error, SpatialBasis};
pub use oracle::{window_trace, DnOracle, SyntheticDn};
pub use lsq::{tikhonov, LsqSolution, Regularization, Tikhonov, MAX_CONDITION};
pub use potential::{born_map, potential_profile, recover_q, BornMap, PotentialInversion};
pub use report::{Conditioning, IterationRecord, ReconstructionReport, RecoveredField};
pub use runge::{runge_control, runge_target, steered_field, RungeComponent, RungeProblem};
pub use taylor::{recover_g_taylor, taylor_polynomial, taylor_profile, SteeredInput, TaylorInversion};
pub use westervelt::{polarization_residual, recover_westervelt_beta, recover_westervelt_kappa, WesterveltInversion};
pub use polyhomogeneous::{
    exponent_semigroup, joint_fit, polyhomogeneous_from_profiles, recover_polyhomogeneous, validate_exponents,
    PolyhomogeneousInversion,
};
