//! ε-linearization of the semilinear solution map and of the DN map.

mod partition;
mod quotient;
mod source;
mod stack;

pub use partition::{enumerate_partitions, proper_partitions, Partition, MAX_PARTITION_ORDER};
pub use quotient::{
    default_eta_ladder, diff_quotient_solution_map, dn_derivative,
    linearization_convergence_report, ConvergenceReport, ConvergenceRow, DnDerivative,
    QuotientKind,
};
pub use source::{faa_di_bruno_source, multi_index, DerivativeBank};
pub use stack::{multi_indices, solve_linearized, LinearizationStack};
