// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod environment;
pub mod error;
pub mod geometry;
pub mod protocol;
pub mod radio;
pub mod rng;
pub mod sim;
pub mod tesla;

pub use error::{Error, Result};
