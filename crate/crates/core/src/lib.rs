#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod diophantine;
pub mod divisor;
pub mod error;
pub mod quadrature;
pub mod realfield;
pub mod summation;
pub mod verify;
pub mod voronoi;

pub use error::{Error, Result};
