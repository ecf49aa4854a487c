// `!(x > 0.0)` is the idiom used throughout to reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod model;
pub mod proc;
pub mod sched;
pub mod sim;
pub mod stats;
pub mod trace;

pub use error::{Error, Result};
