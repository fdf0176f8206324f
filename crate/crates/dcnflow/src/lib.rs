//! File formats, command-line tools and the JSON preview service built on
//! [`dcnflow_core`].

pub mod cli;
pub mod io;
pub mod preview;
pub mod server;

pub use dcnflow_core as core;
