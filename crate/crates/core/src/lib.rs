#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod dnmap;
pub mod expcli;
pub mod error;
pub mod forward;
pub mod fracgrid;
pub mod inverse;
pub mod linearize;
pub mod regularize;
pub mod stats;

pub use error::{Error, Result};
