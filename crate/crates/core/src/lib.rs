#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditionals;
pub mod dataset;
pub mod error;
pub mod estimation;
pub mod model;
pub mod numerics;
pub mod pseudo;
pub mod sample;
pub mod study;
pub mod univariate;

pub use error::{Error, Result};
