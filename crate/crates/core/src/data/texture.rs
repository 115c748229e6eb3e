use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::image::ImageBuffer;

/// Deterministic synthetic RGB texture: a colour gradient, a few oriented
/// sinusoidal gratings and some flat-shaded discs with sharp edges.
pub fn procedural_texture(width: usize, height: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(70.0..180.0));
    let grad: [[f64; 2]; 3] = std::array::from_fn(|_| [rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)]);
    let gratings: Vec<([f64; 3], f64, f64, f64)> = (0..4)
        .map(|_| {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let period: f64 = rng.random_range(10.0..48.0);
            let k = 2.0 * std::f64::consts::PI / period;
            let amp: [f64; 3] = std::array::from_fn(|_| rng.random_range(-18.0..18.0));
            (amp, k * theta.cos(), k * theta.sin(), rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let discs: Vec<(f64, f64, f64, [f64; 3])> = (0..5)
        .map(|_| {
            let cx = rng.random_range(0.0..width as f64);
            let cy = rng.random_range(0.0..height as f64);
            let r = rng.random_range(4.0..(width.min(height) as f64 / 4.0).max(5.0));
            let shift: [f64; 3] = std::array::from_fn(|_| rng.random_range(-45.0..45.0));
            (cx, cy, r, shift)
        })
        .collect();
    ImageBuffer::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        std::array::from_fn(|c| {
            let mut v = base[c] + grad[c][0] * (fx - width as f64 / 2.0) + grad[c][1] * (fy - height as f64 / 2.0);
            for (amp, kx, ky, phase) in &gratings {
                v += amp[c] * (kx * fx + ky * fy + phase).sin();
            }
            for (cx, cy, r, shift) in &discs {
                if (fx - cx).powi(2) + (fy - cy).powi(2) <= r * r {
                    v += shift[c];
                }
            }
            v.round().clamp(0.0, 255.0) as u8
        })
    })
    .expect("non-empty extents")
}
