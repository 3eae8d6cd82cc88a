//! Spectral toolkit for Sturm–Liouville operators `-f'' + q f` with
//! 1-periodic zero-mean potentials.

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod eigensolve;
pub mod equivalence;
pub mod error;
pub mod fundamental;
pub mod inverse;
pub mod io;
pub mod maps;
pub mod oracle;
pub mod potential;
pub mod roots;

pub use error::{Error, Result};
