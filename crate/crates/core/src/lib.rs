#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Holomorphic bundles on noncommutative two-tori at finite truncation.

pub mod algebra;
pub mod ample;
pub mod chern;
pub mod cli;
pub mod dolbeault;
pub mod duality;
pub mod error;
pub mod grid;
pub mod hom;
pub mod hermite;
pub mod interval;
pub mod module;
pub mod rank;

pub use error::{Error, Result};
