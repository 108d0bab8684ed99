//! The parabolically regularized equation, its vanishing-viscosity sweep and the
//! integration-by-parts check.

mod ibp;
mod sweep;

pub use ibp::ibp_residual;
pub use sweep::{default_ladder, regularization_sweep, solve_regularized, RegularizationLadder, SweepRow};
