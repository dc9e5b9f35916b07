//! Backward SDEs driven by a Brownian motion and a discontinuous rough driver.

// `!(x > 0.0)` is the NaN-rejecting form used throughout for argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bdsde;
pub mod decorated;
pub mod drivers;
pub mod error;
pub mod field;
pub mod harness;
pub mod marcus;
pub mod pathcore;
pub mod rbsde;
pub mod young;

pub use error::{Error, Result};
