use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tape, Var};
use crate::tensor::LossReduction;

pub const CHARBONNIER_EPS: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossMode {
    /// `mean_i sqrt(d_i^2 + eps^2)`
    PerPixelMean,
    /// `sqrt(sum_i d_i^2 + eps^2)`
    GlobalNorm,
}

impl LossMode {
    pub fn name(self) -> &'static str {
        match self {
            LossMode::PerPixelMean => "per_pixel_mean",
            LossMode::GlobalNorm => "global_norm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "per_pixel_mean" => Some(LossMode::PerPixelMean),
            "global_norm" => Some(LossMode::GlobalNorm),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharbonnierConfig {
    pub epsilon: f64,
    pub mode: LossMode,
}

impl Default for CharbonnierConfig {
    fn default() -> Self {
        CharbonnierConfig { epsilon: CHARBONNIER_EPS, mode: LossMode::PerPixelMean }
    }
}

/// Charbonnier penalty between `pred` and `target`, differentiable at zero difference.
pub fn charbonnier_loss<T: Scalar>(tape: &mut Tape<T>, pred: Var, target: Var, cfg: &CharbonnierConfig) -> Result<Var> {
    if !(cfg.epsilon > 0.0) {
        return Err(Error::Config(format!("charbonnier epsilon must be > 0, got {}", cfg.epsilon)));
    }
    let reduction = match cfg.mode {
        LossMode::PerPixelMean => LossReduction::PerPixelMean,
        LossMode::GlobalNorm => LossReduction::GlobalNorm,
    };
    tape.charbonnier(pred, target, cfg.epsilon, reduction)
}
