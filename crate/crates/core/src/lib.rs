#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod domain;
pub mod equilibrium;
pub mod error;
pub mod fields;
pub mod io;
pub mod kinetics;
pub mod linalg;
pub mod reduced_ions;
pub mod two_species;

pub use error::{Error, Result};
