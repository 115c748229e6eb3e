//! Training, evaluation, inference and verification commands for the
//! multi-scale restoration network. The `mirnet-forge` binary is a thin
//! argument parser over these functions.

pub mod ablate;
pub mod config;
pub mod eval;
pub mod failure;
pub mod gradcheck;
pub mod infer;
pub mod manifest;
pub mod train;

pub use config::RunConfig;
pub use failure::{Failure, FailureKind};
