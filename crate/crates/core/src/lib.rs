//! Reward-surface math with no operating-system dependencies.
//!
//! Everything in this crate is a pure function of its inputs and explicit
//! seeds: classic-control dynamics, a small tanh actor-critic with manual
//! backprop, A2C/PPO updates, filter-normalized and gradient directions,
//! Monte-Carlo evaluation, line-search layout and cliff classification.
//! File formats, the parallel worker pool and the CLI live in the `rsurf`
//! crate.

#![no_std]
extern crate alloc;

pub mod cliff;
pub mod direction;
pub mod env;
pub mod error;
pub mod eval;
pub mod gae;
pub mod gradient;
pub mod nn;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
