#![cfg_attr(not(test), no_std)]
extern crate alloc;

pub mod error;
pub mod harmonics;
pub mod jet;
pub mod metric;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
pub mod solver;
pub mod surface;
pub mod willmore;

pub use error::{Error, Result};
