//! Synthetic data-centre traffic generation and flow-level benchmarking.
//!
//! Everything here is `no_std` (with `alloc`); file formats, the CLI and the
//! HTTP service live in the `dcnflow` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod benchmarks;
pub mod error;
pub mod generator;
pub mod network;
pub mod nodedist;
pub mod pmf;
pub mod seed;
pub mod simulator;
pub mod similarity;

pub use error::{Error, Result};
