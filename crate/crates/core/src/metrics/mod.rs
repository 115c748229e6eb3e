//! Image quality metrics.

mod psnr;
mod ssim;

pub use psnr::{psnr, Psnr};
pub use ssim::{gaussian_window, ssim};

use crate::data::ImageBuffer;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelMode {
    Rgb,
    /// Full-range BT.601 luma.
    Y,
}

impl ChannelMode {
    pub fn name(self) -> &'static str {
        match self {
            ChannelMode::Rgb => "rgb",
            ChannelMode::Y => "y_channel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rgb" => Some(ChannelMode::Rgb),
            "y_channel" | "y" => Some(ChannelMode::Y),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricConfig {
    pub channel_mode: ChannelMode,
    pub data_range: f64,
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig { channel_mode: ChannelMode::Rgb, data_range: 255.0, window: 11, sigma: 1.5, k1: 0.01, k2: 0.03 }
    }
}

impl MetricConfig {
    fn validate(&self) -> Result<()> {
        if !(self.data_range > 0.0) {
            return Err(Error::Config(format!("data_range must be > 0, got {}", self.data_range)));
        }
        if self.window % 2 == 0 {
            return Err(Error::Config(format!("SSIM window must be odd, got {}", self.window)));
        }
        Ok(())
    }
}

/// Channel planes selected by `mode`, each row-major `width * height`.
pub(crate) fn planes(image: &ImageBuffer, mode: ChannelMode) -> Vec<Vec<f64>> {
    let px = image.pixels();
    match mode {
        ChannelMode::Rgb => (0..3).map(|c| px.chunks(3).map(|p| p[c] as f64).collect()).collect(),
        ChannelMode::Y => vec![px
            .chunks(3)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect()],
    }
}

pub(crate) fn check_extents(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Contract(format!(
            "image extents differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}
