use std::fmt;

use super::{check_extents, planes, MetricConfig};
use crate::data::ImageBuffer;
use crate::error::Result;

/// PSNR in dB, with identical images reported as a separate variant
/// instead of an overflowing float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psnr {
    Finite(f64),
    Infinite,
}

impl Psnr {
    pub fn db(self) -> f64 {
        match self {
            Psnr::Finite(v) => v,
            Psnr::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Psnr::Infinite)
    }

    /// Arithmetic mean of dB values; infinite if any input is.
    pub fn mean(values: &[Psnr]) -> Psnr {
        let mut sum = 0.0;
        for v in values {
            match v {
                Psnr::Finite(x) => sum += x,
                Psnr::Infinite => return Psnr::Infinite,
            }
        }
        Psnr::Finite(sum / values.len() as f64)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Finite(v) => write!(f, "{v}"),
            Psnr::Infinite => f.write_str("inf"),
        }
    }
}

/// `10 log10(range^2 / MSE)` with the MSE pooled over every selected channel.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer, cfg: &MetricConfig) -> Result<Psnr> {
    check_extents(a, b)?;
    cfg.validate()?;
    let (pa, pb) = (planes(a, cfg.channel_mode), planes(b, cfg.channel_mode));
    let mut sq = 0.0;
    let mut n = 0usize;
    for (x, y) in pa.iter().zip(&pb) {
        for (u, v) in x.iter().zip(y) {
            sq += (u - v) * (u - v);
        }
        n += x.len();
    }
    if sq == 0.0 {
        return Ok(Psnr::Infinite);
    }
    let mse = sq / n as f64;
    Ok(Psnr::Finite(10.0 * (cfg.data_range * cfg.data_range / mse).log10()))
}
