//! The training loop.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mirnet_core::blocks::{Mirnet, ParamStore};
use mirnet_core::data::{derive_seed, DegradationSpec, ImageBuffer, PatchSampler};
use mirnet_core::optim::{charbonnier_loss, cosine_lr, AdamState, CharbonnierConfig};
use mirnet_core::tensor::{write_checkpoint, Tape};

use crate::config::RunConfig;
use crate::failure::{Failure, FailureKind, Result};
use crate::manifest::{load_images, read_manifest};

/// Stream labels mixed into the training seed.
const SAMPLER_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

pub const CONFIG_FILE: &str = "config.txt";
pub const LOSS_FILE: &str = "loss.csv";
pub const CHECKPOINT_FILE: &str = "model.ckpt";

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ParamStore<f32>,
    pub final_loss: f64,
    pub checkpoint: Option<PathBuf>,
}

/// Test hook: replace the loss at this 1-based step with NaN.
#[derive(Clone, Copy, Debug, Default)]
pub struct TrainFaults {
    pub nan_loss_at: Option<u64>,
}

pub fn write_config(cfg: &RunConfig, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(CONFIG_FILE), cfg.to_text())?;
    Ok(())
}

fn save(params: &ParamStore<f32>, adam: &AdamState, path: &Path) -> Result<()> {
    let mut ckpt = params.to_checkpoint();
    adam.append_to_checkpoint(params, &mut ckpt);
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, &ckpt)?;
    w.flush()?;
    Ok(())
}

/// Trains on the configured manifest, writing the echoed config, the loss
/// log and checkpoints into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path, faults: TrainFaults) -> Result<TrainOutcome> {
    let manifest = RunConfig::require_manifest(None, &cfg.data.manifest, "data.manifest")?;
    let clean = load_images(&read_manifest(&manifest)?)?;
    write_config(cfg, out_dir)?;
    train_images(cfg, &clean, Some(out_dir), faults)
}

/// Training loop over in-memory clean images. Files are written only when
/// `out_dir` is given.
pub fn train_images(cfg: &RunConfig, clean: &[ImageBuffer], out_dir: Option<&Path>, faults: TrainFaults) -> Result<TrainOutcome> {
    cfg.validate()?;
    let t = &cfg.train;
    let (net, mut params) = Mirnet::build::<f32>(&cfg.network, t.seed)?;
    let mut adam = AdamState::new(&params);
    let sampler = PatchSampler {
        patch_size: t.patch_size,
        batch: t.batch,
        hflip: t.hflip,
        vflip: t.vflip,
        seed: derive_seed(t.seed, SAMPLER_STREAM),
    };
    let noise = DegradationSpec {
        seed: derive_seed(cfg.data.degradation.seed ^ derive_seed(t.seed, NOISE_STREAM), NOISE_STREAM),
        ..cfg.data.degradation.clone()
    };
    let loss_cfg = CharbonnierConfig { mode: t.loss_mode, ..CharbonnierConfig::default() };
    let schedule = t.schedule();

    let mut log = match out_dir {
        Some(dir) => {
            let mut w = BufWriter::new(File::create(dir.join(LOSS_FILE))?);
            writeln!(w, "step,lr,loss")?;
            Some(w)
        }
        None => None,
    };

    let mut final_loss = f64::NAN;
    for index in 0..t.steps {
        let step = index + 1;
        let batch = sampler.sample_fresh(clean, &noise, index)?;
        let lr = cosine_lr(index, &schedule);
        let mut tape = Tape::new();
        let bound = params.bind(&mut tape, true);
        let x = tape.constant(batch.input);
        let target = tape.constant(batch.target);
        let pred = net.forward(&mut tape, &bound, x)?;
        let loss = charbonnier_loss(&mut tape, pred, target, &loss_cfg)?;
        let mut value = tape.value(loss).data()[0] as f64;
        if faults.nan_loss_at == Some(step) {
            value = f64::NAN;
        }
        if !value.is_finite() {
            return Err(Failure::new(FailureKind::Numerical, format!("non-finite loss {value} at step {step}")));
        }
        let grads = tape.backward(loss)?;
        adam.step_from_tape(&mut params, &grads, bound.vars(), lr)?;
        final_loss = value;
        if let Some(w) = log.as_mut() {
            writeln!(w, "{step},{lr},{value}")?;
        }
        if let Some(dir) = out_dir {
            if t.checkpoint_every > 0 && step % t.checkpoint_every == 0 && step != t.steps {
                save(&params, &adam, &dir.join(format!("checkpoint_{step:07}.ckpt")))?;
            }
        }
    }
    if let Some(w) = log.as_mut() {
        w.flush()?;
    }
    let checkpoint = match out_dir {
        Some(dir) => {
            let path = dir.join(CHECKPOINT_FILE);
            save(&params, &adam, &path)?;
            Some(path)
        }
        None => None,
    };
    Ok(TrainOutcome { params, final_loss, checkpoint })
}
