//! Relational-time simulator: global history states over a discretized
//! clock, von Neumann measurements recorded in memory registers, two-time
//! correlations obtained by conditioning on the clock, and the Leggett-Garg
//! statistic built from them.

pub mod backend;
pub mod cli;
pub mod clock;
pub mod correlations;
pub mod error;
pub mod history;
pub mod kernel;
pub mod leggett_garg;
pub mod sampling;
pub mod spectral;
pub mod system;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
