use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::degrade::{degrade, DegradationSpec};
use super::image::{image_to_tensor, ImageBuffer};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Random aligned crops with optional flips, drawn from `(input, target)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchSampler {
    pub patch_size: usize,
    pub batch: usize,
    pub hflip: bool,
    pub vflip: bool,
    pub seed: u64,
}

/// One crop decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crop {
    pub image: usize,
    pub x: usize,
    pub y: usize,
    pub hflip: bool,
    pub vflip: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub input: Tensor<f32>,
    pub target: Tensor<f32>,
    pub crops: Vec<Crop>,
}

pub fn flip_patch(image: &ImageBuffer, horizontal: bool, vertical: bool) -> ImageBuffer {
    let (w, h) = (image.width(), image.height());
    ImageBuffer::from_fn(w, h, |x, y| {
        let sx = if horizontal { w - 1 - x } else { x };
        let sy = if vertical { h - 1 - y } else { y };
        [image.get(sx, sy, 0), image.get(sx, sy, 1), image.get(sx, sy, 2)]
    })
    .expect("extents unchanged")
}

impl PatchSampler {
    /// Random stream for batch `index`: the base seed selects the key and
    /// the batch index selects the ChaCha stream.
    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    pub fn crops(&self, pairs: &[(ImageBuffer, ImageBuffer)], index: u64) -> Result<Vec<Crop>> {
        if pairs.is_empty() {
            return Err(Error::Contract("no images to sample from".into()));
        }
        for (i, (input, target)) in pairs.iter().enumerate() {
            if input.width() != target.width() || input.height() != target.height() {
                return Err(Error::Contract(format!("image {i}: input and target extents differ")));
            }
            if input.width() < self.patch_size || input.height() < self.patch_size {
                return Err(Error::Contract(format!(
                    "image {i} ({}x{}) is smaller than patch size {}",
                    input.width(),
                    input.height(),
                    self.patch_size
                )));
            }
        }
        let mut rng = self.rng(index);
        Ok((0..self.batch)
            .map(|_| {
                let image = rng.random_range(0..pairs.len());
                let (w, h) = (pairs[image].0.width(), pairs[image].0.height());
                let x = rng.random_range(0..=w - self.patch_size);
                let y = rng.random_range(0..=h - self.patch_size);
                let hflip = rng.random::<bool>() && self.hflip;
                let vflip = rng.random::<bool>() && self.vflip;
                Crop { image, x, y, hflip, vflip }
            })
            .collect())
    }

    /// Draws batch number `index`. Determined entirely by `(seed, index)`.
    pub fn sample_batch(&self, pairs: &[(ImageBuffer, ImageBuffer)], index: u64) -> Result<Batch> {
        let crops = self.crops(pairs, index)?;
        let p = self.patch_size;
        let mut inputs = Vec::with_capacity(crops.len());
        let mut targets = Vec::with_capacity(crops.len());
        for c in &crops {
            let (input, target) = &pairs[c.image];
            inputs.push(flip_patch(&input.crop(c.x, c.y, p, p)?, c.hflip, c.vflip));
            targets.push(flip_patch(&target.crop(c.x, c.y, p, p)?, c.hflip, c.vflip));
        }
        Ok(Batch {
            input: image_to_tensor(&inputs.iter().collect::<Vec<_>>())?,
            target: image_to_tensor(&targets.iter().collect::<Vec<_>>())?,
            crops,
        })
    }
}

impl PatchSampler {
    /// Like [`PatchSampler::sample_batch`] over clean images, but each patch
    /// is degraded after cropping with its own seed, so every batch sees a
    /// new degradation draw.
    pub fn sample_fresh(&self, clean: &[ImageBuffer], spec: &DegradationSpec, index: u64) -> Result<Batch> {
        spec.validate()?;
        let pairs: Vec<(ImageBuffer, ImageBuffer)> = clean.iter().map(|c| (c.clone(), c.clone())).collect();
        let crops = self.crops(&pairs, index)?;
        let p = self.patch_size;
        let batch_spec = spec.for_item(index);
        let mut inputs = Vec::with_capacity(crops.len());
        let mut targets = Vec::with_capacity(crops.len());
        for (k, c) in crops.iter().enumerate() {
            let target = flip_patch(&clean[c.image].crop(c.x, c.y, p, p)?, c.hflip, c.vflip);
            let (input, target) = degrade(&target, &batch_spec.for_item(k as u64))?;
            inputs.push(input);
            targets.push(target);
        }
        Ok(Batch {
            input: image_to_tensor(&inputs.iter().collect::<Vec<_>>())?,
            target: image_to_tensor(&targets.iter().collect::<Vec<_>>())?,
            crops,
        })
    }
}
