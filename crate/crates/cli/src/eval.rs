//! Held-out evaluation and the tab-separated report.

use std::fmt::Write as _;
use std::path::Path;

use mirnet_core::data::{degrade, ImageBuffer};
use mirnet_core::metrics::{psnr, ssim, MetricConfig, Psnr};

use crate::config::RunConfig;
use crate::failure::Result;
use crate::infer::Model;
use crate::manifest::{load_images, read_manifest};

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub name: String,
    pub psnr: Psnr,
    pub ssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub rows: Vec<Row>,
}

impl Section {
    pub fn mean_psnr(&self) -> Psnr {
        Psnr::mean(&self.rows.iter().map(|r| r.psnr).collect::<Vec<_>>())
    }

    pub fn mean_ssim(&self) -> f64 {
        self.rows.iter().map(|r| r.ssim).sum::<f64>() / self.rows.len() as f64
    }

    fn write(&self, title: &str, out: &mut String) {
        writeln!(out, "[{title}]").unwrap();
        writeln!(out, "name\tpsnr_db\tssim").unwrap();
        for r in &self.rows {
            writeln!(out, "{}\t{}\t{}", r.name, r.psnr, r.ssim).unwrap();
        }
        writeln!(out, "mean\t{}\t{}", self.mean_psnr(), self.mean_ssim()).unwrap();
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub metric: MetricConfig,
    /// Restored output against the clean target.
    pub restored: Section,
    /// Degraded input against the clean target.
    pub baseline: Section,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# channel_mode\t{}", self.metric.channel_mode.name()).unwrap();
        self.restored.write("restored", &mut out);
        self.baseline.write("baseline", &mut out);
        out
    }

    /// Mean restored PSNR minus mean degraded-input PSNR.
    pub fn gain_db(&self) -> f64 {
        self.restored.mean_psnr().db() - self.baseline.mean_psnr().db()
    }
}

fn score(name: &str, a: &ImageBuffer, b: &ImageBuffer, metric: &MetricConfig) -> Result<Row> {
    Ok(Row { name: name.to_string(), psnr: psnr(a, b, metric)?, ssim: ssim(a, b, metric)? })
}

/// Degrades every clean image with its per-item seed, restores it and scores
/// both the restoration and the degraded input.
pub fn evaluate(cfg: &RunConfig, model: &Model, names: &[String], clean: &[ImageBuffer]) -> Result<EvalReport> {
    let metric = MetricConfig { channel_mode: cfg.eval.channel_mode, ..MetricConfig::default() };
    let mut restored = Vec::with_capacity(clean.len());
    let mut baseline = Vec::with_capacity(clean.len());
    for (i, (name, target)) in names.iter().zip(clean).enumerate() {
        let (input, target) = degrade(target, &cfg.data.degradation.for_item(i as u64))?;
        let output = model.restore(&input)?;
        restored.push(score(name, &output, &target, &metric)?);
        baseline.push(score(name, &input, &target, &metric)?);
    }
    Ok(EvalReport { metric, restored: Section { rows: restored }, baseline: Section { rows: baseline } })
}

pub fn run(cfg: &RunConfig, checkpoint: &Path, manifest: Option<&Path>) -> Result<EvalReport> {
    let manifest = RunConfig::require_manifest(manifest, &cfg.eval.manifest, "eval.manifest")?;
    let entries = read_manifest(&manifest)?;
    let clean = load_images(&entries)?;
    let model = Model::load(cfg, checkpoint)?;
    let names: Vec<String> = entries.into_iter().map(|e| e.name).collect();
    evaluate(cfg, &model, &names, &clean)
}
