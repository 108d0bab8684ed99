//! Truncated grids and the spectral fractional Laplacian.

mod field;
mod grid;
pub mod io;
mod laws;
mod operator;

pub use field::{trapezoid_weights, SpaceTimeField, Support};
pub use grid::{Grid, RegionSpec};
pub use laws::{check_operator_laws, LawReport, OperatorLaw, PoincareLaw, SemigroupLaw};
pub use operator::{base_laplacian, second_difference, FracOp, Spectrum};
