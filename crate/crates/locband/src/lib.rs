//! Experiments, verification suite, file formats and the command line
//! around `locband-core`.

pub mod brownian;
pub mod cli;
pub mod harness;
pub mod io;
pub mod verify;

pub use locband_core as core;
