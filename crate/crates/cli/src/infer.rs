//! Whole-image restoration.

use std::fs::File;
use std::path::Path;

use mirnet_core::blocks::{Mirnet, ParamStore};
use mirnet_core::data::{image_to_tensor, load_ppm, save_ppm, tensor_to_images, ImageBuffer};
use mirnet_core::tensor::{read_checkpoint, Tape};

use crate::config::RunConfig;
use crate::failure::{Failure, Result};

/// Network and weights ready for inference.
pub struct Model {
    pub net: Mirnet,
    pub params: ParamStore<f32>,
}

impl Model {
    pub fn new(cfg: &RunConfig, params: ParamStore<f32>) -> Result<Self> {
        let (net, _) = Mirnet::build::<f32>(&cfg.network, 0)?;
        Ok(Model { net, params })
    }

    /// Builds the configured network and loads weights from `checkpoint`;
    /// extent or name mismatches are config errors naming the parameter.
    pub fn load(cfg: &RunConfig, checkpoint: &Path) -> Result<Self> {
        let (net, mut params) = Mirnet::build::<f32>(&cfg.network, 0)?;
        let file = File::open(checkpoint)
            .map_err(|e| Failure::data(format!("cannot open checkpoint {}: {e}", checkpoint.display())))?;
        let ckpt = read_checkpoint(std::io::BufReader::new(file)).map_err(|e| Failure::from(e).context(checkpoint.display()))?;
        params.load_checkpoint(&ckpt)?;
        Ok(Model { net, params })
    }

    /// Restores one image of any extents. Inputs whose extents are not a
    /// multiple of the stream divisibility are reflect-padded up to the next
    /// multiple, restored and centre-cropped back.
    pub fn restore(&self, image: &ImageBuffer) -> Result<ImageBuffer> {
        let d = self.net.config.divisibility();
        let (w, h) = (image.width(), image.height());
        let (pw, ph) = (w.div_ceil(d) * d, h.div_ceil(d) * d);
        let (left, top) = ((pw - w) / 2, (ph - h) / 2);
        let padded = if (pw, ph) == (w, h) { image.clone() } else { image.reflect_pad(left, top, pw, ph)? };

        let mut tape = Tape::new();
        let p = self.params.bind(&mut tape, false);
        let x = tape.constant(image_to_tensor(&[&padded])?);
        let y = self.net.forward(&mut tape, &p, x)?;
        let out = tape.value(y);
        if !out.is_finite() {
            return Err(Failure::new(crate::FailureKind::Numerical, "network output is not finite"));
        }
        let restored = tensor_to_images(out)?.remove(0);
        if (pw, ph) == (w, h) {
            Ok(restored)
        } else {
            Ok(restored.crop(left, top, w, h)?)
        }
    }
}

pub fn run(cfg: &RunConfig, checkpoint: &Path, input: &Path, output: &Path) -> Result<()> {
    let model = Model::load(cfg, checkpoint)?;
    let image = load_ppm(input).map_err(|e| Failure::from(e).context(input.display()))?;
    let restored = model.restore(&image)?;
    save_ppm(&restored, output).map_err(|e| Failure::from(e).context(output.display()))?;
    Ok(())
}
