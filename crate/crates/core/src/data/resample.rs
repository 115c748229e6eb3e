//! Separable bicubic resampling with the Keys kernel (a = -0.5).
//!
//! Pixel centres map as `src = (dst + 0.5) / scale - 0.5`; samples outside the
//! image clamp to the nearest edge. When shrinking, the kernel is stretched by
//! `1 / scale` so that it low-passes before decimation.

use super::image::ImageBuffer;
use crate::error::{Error, Result};

const KEYS_A: f64 = -0.5;

fn keys(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 1.0 {
        ((KEYS_A + 2.0) * ax - (KEYS_A + 3.0)) * ax * ax + 1.0
    } else if ax < 2.0 {
        ((KEYS_A * ax - 5.0 * KEYS_A) * ax + 8.0 * KEYS_A) * ax - 4.0 * KEYS_A
    } else {
        0.0
    }
}

/// Contributing source indices and normalised weights for each output sample.
fn axis_taps(input: usize, output: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = output as f64 / input as f64;
    let stretch = if scale < 1.0 { 1.0 / scale } else { 1.0 };
    let support = 2.0 * stretch;
    (0..output)
        .map(|o| {
            let center = (o as f64 + 0.5) / scale - 0.5;
            let lo = (center - support).floor() as isize;
            let hi = (center + support).ceil() as isize;
            let mut taps: Vec<(usize, f64)> = Vec::new();
            for i in lo..=hi {
                let w = keys((i as f64 - center) / stretch);
                if w == 0.0 {
                    continue;
                }
                let idx = i.clamp(0, input as isize - 1) as usize;
                match taps.iter_mut().find(|(j, _)| *j == idx) {
                    Some((_, acc)) => *acc += w,
                    None => taps.push((idx, w)),
                }
            }
            let total: f64 = taps.iter().map(|(_, w)| w).sum();
            if (total - 1.0).abs() > 1e-12 {
                for (_, w) in taps.iter_mut() {
                    *w /= total;
                }
            }
            taps
        })
        .collect()
}

/// Resamples interleaved RGB samples without rounding.
pub(crate) fn bicubic_resize_f64(src: &[f64], width: usize, height: usize, out_w: usize, out_h: usize) -> Vec<f64> {
    let xt = axis_taps(width, out_w);
    let yt = axis_taps(height, out_h);
    let mut rows = vec![0.0; 3 * out_w * height];
    for y in 0..height {
        for (ox, taps) in xt.iter().enumerate() {
            for c in 0..3 {
                rows[3 * (y * out_w + ox) + c] = taps.iter().map(|&(x, w)| w * src[3 * (y * width + x) + c]).sum();
            }
        }
    }
    let mut out = vec![0.0; 3 * out_w * out_h];
    for (oy, taps) in yt.iter().enumerate() {
        for ox in 0..out_w {
            for c in 0..3 {
                out[3 * (oy * out_w + ox) + c] = taps.iter().map(|&(y, w)| w * rows[3 * (y * out_w + ox) + c]).sum();
            }
        }
    }
    out
}

pub fn bicubic_resize(image: &ImageBuffer, out_width: usize, out_height: usize) -> Result<ImageBuffer> {
    if out_width == 0 || out_height == 0 {
        return Err(Error::Contract(format!("output extents must be >= 1, got {out_width}x{out_height}")));
    }
    let src: Vec<f64> = image.pixels().iter().map(|&p| p as f64).collect();
    let out = bicubic_resize_f64(&src, image.width(), image.height(), out_width, out_height);
    ImageBuffer::new(out_width, out_height, out.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect())
}
