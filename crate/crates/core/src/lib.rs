//! Koopman-operator propagation of polynomial orbital elements and Lambert
//! targeting on top of it, with classical reference solvers for validation.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod basis;
pub mod elements;
pub mod error;
pub mod koopman;
pub mod lambert;
pub mod oracles;

pub use error::{Error, Result};
