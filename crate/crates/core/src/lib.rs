//! Building blocks for a multi-scale residual image restoration network.
//!
//! The crate is split into:
//!
//! * [`tensor`]: NCHW tensors, a reverse-mode autodiff tape, finite-difference
//!   gradient checking and the binary checkpoint container.
//! * [`blocks`]: the network components (selective kernel fusion, dual
//!   attention, residual resizing, multi-scale residual blocks, groups) and
//!   the assembled network.
//! * [`optim`]: Charbonnier loss, Adam and the cosine learning-rate schedule.
//! * [`data`]: PPM I/O, synthetic degradations, bicubic resampling and patch
//!   sampling.
//! * [`metrics`]: PSNR and SSIM.

pub mod blocks;
pub mod data;
pub mod error;
pub mod metrics;
pub mod optim;
pub mod tensor;

pub use error::{Error, Result};
