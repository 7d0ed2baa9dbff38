//! Reward-surface toolkit: run directories, checkpoint and direction files,
//! the parallel grid engine, gradient line searches, cliff reports, the
//! cliff experiment and seed sweeps. The numerical core is `rsurf-core`.

pub mod analysis;
pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod format;
pub mod pool;
pub mod run;
pub mod surface;
pub mod sweep;

pub use error::{Error, Result};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
