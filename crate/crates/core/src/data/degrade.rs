use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::image::ImageBuffer;
use super::resample::bicubic_resize;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Denoise,
    SuperResolve,
    Enhance,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Denoise => "denoise",
            Task::SuperResolve => "super_resolve",
            Task::Enhance => "enhance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "denoise" => Some(Task::Denoise),
            "super_resolve" => Some(Task::SuperResolve),
            "enhance" => Some(Task::Enhance),
            _ => None,
        }
    }
}

/// Synthetic degradation. Only the fields of the selected task are read.
#[derive(Clone, Debug, PartialEq)]
pub struct DegradationSpec {
    pub task: Task,
    /// Gaussian standard deviation in 8-bit units.
    pub noise_sigma: f64,
    pub scale_factor: usize,
    pub exposure_gain: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        DegradationSpec { task: Task::Denoise, noise_sigma: 25.0, scale_factor: 2, exposure_gain: 0.5, gamma: 2.0, seed: 0 }
    }
}

impl DegradationSpec {
    pub fn validate(&self) -> Result<()> {
        match self.task {
            Task::Denoise if !(self.noise_sigma >= 0.0) => {
                Err(Error::Config(format!("noise_sigma must be >= 0, got {}", self.noise_sigma)))
            }
            Task::SuperResolve if !matches!(self.scale_factor, 2..=4) => {
                Err(Error::Config(format!("scale_factor must be 2, 3 or 4, got {}", self.scale_factor)))
            }
            Task::Enhance if !(self.exposure_gain > 0.0 && self.exposure_gain <= 1.0) => {
                Err(Error::Config(format!("exposure_gain must be in (0, 1], got {}", self.exposure_gain)))
            }
            Task::Enhance if !(self.gamma >= 1.0) => {
                Err(Error::Config(format!("gamma must be >= 1, got {}", self.gamma)))
            }
            _ => Ok(()),
        }
    }

    /// The same spec with its seed replaced by one derived for item `index`.
    pub fn for_item(&self, index: u64) -> Self {
        DegradationSpec { seed: derive_seed(self.seed, index), ..self.clone() }
    }
}

/// Mixes a base seed with a stream index (SplitMix64 finaliser).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Adds N(0, sigma^2) noise in 8-bit units to every sample, then rounds and clamps.
pub fn add_gaussian_noise(image: &ImageBuffer, sigma: f64, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = image.clone();
    for p in out.pixels_mut() {
        let n: f64 = StandardNormal.sample(&mut rng);
        *p = (*p as f64 + sigma * n).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Under-exposure stand-in: `round(255 * gain * (p / 255)^gamma)`.
pub fn adjust_exposure(image: &ImageBuffer, gain: f64, gamma: f64) -> ImageBuffer {
    let lut: Vec<u8> = (0..256)
        .map(|p| (255.0 * gain * (p as f64 / 255.0).powf(gamma)).round().clamp(0.0, 255.0) as u8)
        .collect();
    let mut out = image.clone();
    for p in out.pixels_mut() {
        *p = lut[*p as usize];
    }
    out
}

/// Produces an `(input, target)` pair with identical extents.
pub fn degrade(image: &ImageBuffer, spec: &DegradationSpec) -> Result<(ImageBuffer, ImageBuffer)> {
    spec.validate()?;
    let input = match spec.task {
        Task::Denoise => add_gaussian_noise(image, spec.noise_sigma, spec.seed),
        Task::SuperResolve => {
            let s = spec.scale_factor;
            let (w, h) = (image.width(), image.height());
            if w % s != 0 || h % s != 0 {
                return Err(Error::Contract(format!("{w}x{h} image is not divisible by scale factor {s}")));
            }
            let low = bicubic_resize(image, w / s, h / s)?;
            bicubic_resize(&low, w, h)?
        }
        Task::Enhance => adjust_exposure(image, spec.exposure_gain, spec.gamma),
    };
    Ok((input, image.clone()))
}
