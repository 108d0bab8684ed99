//! Exterior traces, DN pairings and the structural identities behind the inverse problems.

mod dataset;
mod identities;
mod trace;

pub use dataset::{forward_solution, pairings_csv, DnDataset};
pub use identities::{adjoint_identity_residual, integral_identity_residual, IdentityCheck};
pub use trace::{dn_pairing, dn_trace, reversed_test_field, DnTrace};
