// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod cli;
pub mod error;
pub mod interval_maps;
pub mod market;
pub mod numeric;
pub mod orbit_engine;
pub mod stats;

pub use error::{Error, Result};
