use super::{check_extents, planes, MetricConfig};
use crate::data::ImageBuffer;
use crate::error::{Error, Result};

/// Normalised 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size / 2) as f64;
    let w: Vec<f64> = (0..size).map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Valid-mode separable filtering of a `width x height` plane.
fn filter_valid(plane: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (width - k + 1, height - k + 1);
    let mut rows = vec![0.0; ow * height];
    for y in 0..height {
        for x in 0..ow {
            rows[y * ow + x] = taps.iter().enumerate().map(|(i, w)| w * plane[y * width + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(i, w)| w * rows[(y + i) * ow + x]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], width: usize, height: usize, taps: &[f64], c1: f64, c2: f64) -> f64 {
    let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| u * v).collect::<Vec<_>>();
    let mu_a = filter_valid(a, width, height, taps);
    let mu_b = filter_valid(b, width, height, taps);
    let aa = filter_valid(&prod(a, a), width, height, taps);
    let bb = filter_valid(&prod(b, b), width, height, taps);
    let ab = filter_valid(&prod(a, b), width, height, taps);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total / mu_a.len() as f64
}

/// Mean Gaussian-window SSIM over all window positions fully inside the
/// image, averaged over the selected channels.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer, cfg: &MetricConfig) -> Result<f64> {
    check_extents(a, b)?;
    cfg.validate()?;
    let (w, h) = (a.width(), a.height());
    if w < cfg.window || h < cfg.window {
        return Err(Error::Contract(format!(
            "{w}x{h} image is smaller than the {}x{} SSIM window",
            cfg.window, cfg.window
        )));
    }
    let taps = gaussian_window(cfg.window, cfg.sigma);
    let c1 = (cfg.k1 * cfg.data_range).powi(2);
    let c2 = (cfg.k2 * cfg.data_range).powi(2);
    let (pa, pb) = (planes(a, cfg.channel_mode), planes(b, cfg.channel_mode));
    let sum: f64 = pa.iter().zip(&pb).map(|(x, y)| ssim_plane(x, y, w, h, &taps, c1, c2)).sum();
    Ok(sum / pa.len() as f64)
}
