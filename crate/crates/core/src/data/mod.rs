//! Images, synthetic degradations and training batches.

mod degrade;
mod image;
mod resample;
mod sampler;
mod texture;

pub use degrade::{add_gaussian_noise, adjust_exposure, degrade, derive_seed, DegradationSpec, Task};
pub use image::{image_to_tensor, load_ppm, read_ppm, save_ppm, tensor_to_images, write_ppm, ImageBuffer};
pub use resample::bicubic_resize;
pub use sampler::{flip_patch, Batch, Crop, PatchSampler};
pub use texture::procedural_texture;
