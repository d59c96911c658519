//! Event-driven wave-front tracking for the damped isothermal p-system in
//! mass coordinates, with Eulerian reconstruction and online functionals.

// Negated float comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod driver;
pub mod error;
pub mod euler;
pub mod functionals;
pub mod riemann;
pub mod splitting;
pub mod tracker;

pub use error::{Error, Result};
