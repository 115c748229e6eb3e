//! Training objective, optimizer and learning-rate schedule.

mod adam;
mod loss;
mod schedule;

pub use adam::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use loss::{charbonnier_loss, CharbonnierConfig, LossMode, CHARBONNIER_EPS};
pub use schedule::{cosine_lr, CosineSchedule};
