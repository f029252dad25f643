//! Simulation and verification toolkit for the evolving Bolthausen–Sznitman
//! coalescent and its limit processes.

// negated float comparisons are used on purpose: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coalescent;
pub mod error;
pub mod numeric;
pub mod ou;
pub mod path;
pub mod pdmp;
pub mod population;
pub mod quadrature;
pub mod recursive_tree;
pub mod rng;
pub mod stable;
pub mod stats;
pub mod verification;

pub use error::{Error, Result};
