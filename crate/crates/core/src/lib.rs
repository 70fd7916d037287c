//! Algorithmic core of the tactile SLAM workbench.
//!
//! Everything here is pure computation over caller-owned data: geometry,
//! the kinematic touch environment, intrinsic rewards, a small reverse-mode
//! gradient engine with PPO on top, the multi-scale implicit reconstruction
//! network, evaluation metrics and the procedural shape corpus. File formats,
//! configuration parsing and the command line live in the `tslam` crate.
#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod env;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod math;
pub mod metrics;
pub mod nn;
pub mod policy;
pub mod recon;
pub mod reward;
pub mod rng;

pub use error::{Error, Result};
