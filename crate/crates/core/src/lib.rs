// `!(x > y)` is how parameter checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod control;
pub mod cvs;
pub mod detector;
pub mod error;
pub mod harness;
pub mod params;
pub mod pump;
pub mod scenario;
pub mod sim;
pub mod trace;
pub mod units;

pub use error::{Error, Result};
