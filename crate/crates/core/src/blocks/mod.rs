//! Network components and the assembled restoration network.
//!
//! Architecture structs hold only [`ParamId`]s; values live in a
//! [`ParamStore`] so the same topology runs in `f32` for training and `f64`
//! for gradient checks.

mod check;
mod count;
mod dau;
mod layers;
mod mrb;
mod network;
mod params;
mod resize;
mod skff;

pub use check::{grad_check_block, probe_loss};
pub use count::{count_parameters, fusion_parameter_count, ParamCount};
pub use dau::{bottleneck_width, ChannelAttention, Dau, SpatialAttention, SPATIAL_KERNEL};
pub use layers::{Conv, PRelu, PRELU_INIT};
pub use mrb::{Exchange, Mrb};
pub use network::{Mirnet, NetworkConfig, Rrg};
pub use params::{Bound, Param, ParamBuilder, ParamId, ParamStore};
pub use resize::{Direction, Resize, ResizeChain};
pub use skff::{reduction_width, Fusion, FusionKind, Skff};
