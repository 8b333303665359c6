//! Computable objects around AT(n) systems and symbolic dynamics.

pub mod atn;
pub mod entropy;
pub mod error;
pub mod furstenberg;
pub mod lp;
pub mod measures;
pub mod seed;
pub mod symbolic;
pub mod witness;

pub use error::{Error, Result};
