//! Linear, semilinear and Westervelt-type solvers.

mod coefficient;
mod energy;
mod exterior;
mod linear;
mod model;
mod nonlinearity;
mod params;
mod persist;
mod semilinear;
pub(crate) mod stepper;
mod westervelt;

pub use coefficient::{Coefficient, Profile};
pub use energy::{energy_identity_check, EnergyLedger};
pub use exterior::{lift_exterior, Envelope, ExteriorComponent, ExteriorInput, Lift};
pub use linear::{solve_backward_adjoint, solve_linear_mgt};
pub(crate) use linear::solve_with_reg;
pub(crate) use model::{total_drive, Compact};
pub use model::{Forcing, Model, Potential, SolveInfo, StateTrajectory};
pub use nonlinearity::{
    signed_power_derivative, Nonlinearity, PolyTerm, Polyhomogeneous, PolynomialType,
    SampledNonlinearity, MAX_TAU_ORDER,
};
pub use params::{MgtParams, Scheme, TimeGrid};
pub use persist::save_trajectory;
pub use semilinear::{solve_semilinear_mgt, PicardSettings};
pub(crate) use westervelt::{beta_source, kappa_source, CoefficientJet};
pub use westervelt::{dimension_gate, solve_westervelt};
