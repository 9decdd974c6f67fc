//! Sequence-design command line, file formats and a radar/communications
//! coexistence simulator built on `cogwave-core`.

// `!(x > 0.0)` style checks are meant to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
mod error;
pub mod io;
pub mod manifest;
pub mod sim;

pub use error::{Error, Result};
