//! Run configuration: a flat `section.key = value` file with `#` comments.
//!
//! Every key has a default (the desk-scale setup), so a config only lists
//! what it changes. Unknown and repeated keys are rejected. [`RunConfig::to_text`]
//! writes the complete effective configuration, which parses back to an
//! identical value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mirnet_core::blocks::{FusionKind, NetworkConfig};
use mirnet_core::data::{DegradationSpec, Task};
use mirnet_core::metrics::ChannelMode;
use mirnet_core::optim::{CosineSchedule, LossMode};

use crate::failure::{Failure, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub steps: u64,
    pub batch: usize,
    pub patch_size: usize,
    pub lr_init: f64,
    pub lr_min: f64,
    pub seed: u64,
    pub loss_mode: LossMode,
    /// Write an intermediate checkpoint every this many steps; 0 disables.
    pub checkpoint_every: u64,
    pub hflip: bool,
    pub vflip: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 2000,
            batch: 4,
            patch_size: 32,
            lr_init: 2e-4,
            lr_min: 1e-6,
            seed: 0,
            loss_mode: LossMode::PerPixelMean,
            checkpoint_every: 0,
            hflip: true,
            vflip: true,
        }
    }
}

impl TrainConfig {
    pub fn schedule(&self) -> CosineSchedule {
        CosineSchedule { lr_init: self.lr_init, lr_min: self.lr_min, total_steps: self.steps }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct DataConfig {
    /// Training images.
    pub manifest: Option<PathBuf>,
    pub degradation: DegradationSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Held-out images.
    pub manifest: Option<PathBuf>,
    pub channel_mode: ChannelMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { manifest: None, channel_mode: ChannelMode::Rgb }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub data: DataConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            network: NetworkConfig::desk(),
            train: TrainConfig::default(),
            data: DataConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "network.n_rrg",
    "network.mrb_per_rrg",
    "network.n_streams",
    "network.n_columns",
    "network.base_channels",
    "network.fusion",
    "train.steps",
    "train.batch",
    "train.patch_size",
    "train.lr_init",
    "train.lr_min",
    "train.seed",
    "train.loss_mode",
    "train.checkpoint_every",
    "train.hflip",
    "train.vflip",
    "data.manifest",
    "data.task",
    "data.noise_sigma",
    "data.scale_factor",
    "data.exposure_gain",
    "data.gamma",
    "data.seed",
    "eval.manifest",
    "eval.channel_mode",
];

struct Raw {
    values: BTreeMap<String, (usize, String)>,
}

impl Raw {
    fn take<T>(&mut self, key: &str, parse: impl FnOnce(&str) -> Option<T>, target: &mut T) -> Result<()> {
        if let Some((line, value)) = self.values.remove(key) {
            *target = parse(&value)
                .ok_or_else(|| Failure::config(format!("line {line}: invalid value {value:?} for {key}")))?;
        }
        Ok(())
    }

    fn num<T: FromStr>(&mut self, key: &str, target: &mut T) -> Result<()> {
        self.take(key, |v| v.parse().ok(), target)
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

impl RunConfig {
    /// Parses config text. Relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut raw = Raw { values: BTreeMap::new() };
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Failure::config(format!("line {line_no}: expected `section.key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Failure::config(format!("line {line_no}: unknown key {key}")));
            }
            if let Some((first, _)) = raw.values.insert(key.to_string(), (line_no, value.to_string())) {
                return Err(Failure::config(format!("line {line_no}: {key} already set on line {first}")));
            }
        }

        let mut cfg = RunConfig::default();
        let n = &mut cfg.network;
        raw.num("network.n_rrg", &mut n.n_rrg)?;
        raw.num("network.mrb_per_rrg", &mut n.mrb_per_rrg)?;
        raw.num("network.n_streams", &mut n.n_streams)?;
        raw.num("network.n_columns", &mut n.n_columns)?;
        raw.num("network.base_channels", &mut n.base_channels)?;
        raw.take("network.fusion", FusionKind::parse, &mut n.fusion)?;

        let t = &mut cfg.train;
        raw.num("train.steps", &mut t.steps)?;
        raw.num("train.batch", &mut t.batch)?;
        raw.num("train.patch_size", &mut t.patch_size)?;
        raw.num("train.lr_init", &mut t.lr_init)?;
        raw.num("train.lr_min", &mut t.lr_min)?;
        raw.num("train.seed", &mut t.seed)?;
        raw.take("train.loss_mode", LossMode::parse, &mut t.loss_mode)?;
        raw.num("train.checkpoint_every", &mut t.checkpoint_every)?;
        raw.take("train.hflip", parse_bool, &mut t.hflip)?;
        raw.take("train.vflip", parse_bool, &mut t.vflip)?;

        let resolve = |v: &str| Some(std::path::absolute(base_dir.join(v)).unwrap_or_else(|_| base_dir.join(v)));
        let mut manifest = None;
        raw.take("data.manifest", |v| resolve(v).map(Some), &mut manifest)?;
        cfg.data.manifest = manifest;
        let d = &mut cfg.data.degradation;
        raw.take("data.task", Task::parse, &mut d.task)?;
        raw.num("data.noise_sigma", &mut d.noise_sigma)?;
        raw.num("data.scale_factor", &mut d.scale_factor)?;
        raw.num("data.exposure_gain", &mut d.exposure_gain)?;
        raw.num("data.gamma", &mut d.gamma)?;
        raw.num("data.seed", &mut d.seed)?;

        let mut manifest = None;
        raw.take("eval.manifest", |v| resolve(v).map(Some), &mut manifest)?;
        cfg.eval.manifest = manifest;
        raw.take("eval.channel_mode", ChannelMode::parse, &mut cfg.eval.channel_mode)?;
        debug_assert!(raw.values.is_empty());

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base).map_err(|f| f.context(path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        let t = &self.train;
        let checks = [
            (t.steps >= 1, "train.steps must be >= 1"),
            (t.batch >= 1, "train.batch must be >= 1"),
            (t.patch_size >= 1, "train.patch_size must be >= 1"),
            (t.lr_init > 0.0 && t.lr_init.is_finite(), "train.lr_init must be positive"),
            (t.lr_min >= 0.0 && t.lr_min <= t.lr_init, "train.lr_min must lie in [0, train.lr_init]"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Failure::config(msg));
            }
        }
        let d = self.network.divisibility();
        if t.patch_size % d != 0 {
            return Err(Failure::config(format!(
                "train.patch_size = {} must be divisible by {d} for {} streams",
                t.patch_size, self.network.n_streams
            )));
        }
        let spec = &self.data.degradation;
        spec.validate().map_err(|e| Failure::from(e).context("data"))?;
        if spec.task == Task::SuperResolve && t.patch_size % spec.scale_factor != 0 {
            return Err(Failure::config(format!(
                "train.patch_size = {} must be divisible by data.scale_factor = {}",
                t.patch_size, spec.scale_factor
            )));
        }
        Ok(())
    }

    /// The complete effective configuration, one key per line.
    pub fn to_text(&self) -> String {
        let (n, t, d) = (&self.network, &self.train, &self.data.degradation);
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let mut entries: Vec<(&str, Option<String>)> = vec![
            ("network.n_rrg", Some(n.n_rrg.to_string())),
            ("network.mrb_per_rrg", Some(n.mrb_per_rrg.to_string())),
            ("network.n_streams", Some(n.n_streams.to_string())),
            ("network.n_columns", Some(n.n_columns.to_string())),
            ("network.base_channels", Some(n.base_channels.to_string())),
            ("network.fusion", Some(n.fusion.name().to_string())),
            ("train.steps", Some(t.steps.to_string())),
            ("train.batch", Some(t.batch.to_string())),
            ("train.patch_size", Some(t.patch_size.to_string())),
            ("train.lr_init", Some(t.lr_init.to_string())),
            ("train.lr_min", Some(t.lr_min.to_string())),
            ("train.seed", Some(t.seed.to_string())),
            ("train.loss_mode", Some(t.loss_mode.name().to_string())),
            ("train.checkpoint_every", Some(t.checkpoint_every.to_string())),
            ("train.hflip", Some(t.hflip.to_string())),
            ("train.vflip", Some(t.vflip.to_string())),
            ("data.manifest", path(&self.data.manifest)),
            ("data.task", Some(d.task.name().to_string())),
            ("data.noise_sigma", Some(d.noise_sigma.to_string())),
            ("data.scale_factor", Some(d.scale_factor.to_string())),
            ("data.exposure_gain", Some(d.exposure_gain.to_string())),
            ("data.gamma", Some(d.gamma.to_string())),
            ("data.seed", Some(d.seed.to_string())),
            ("eval.manifest", path(&self.eval.manifest)),
            ("eval.channel_mode", Some(self.eval.channel_mode.name().to_string())),
        ];
        debug_assert_eq!(entries.len(), KEYS.len());
        let mut out = String::new();
        let mut section = "";
        for (key, value) in entries.drain(..) {
            let head = key.split('.').next().unwrap_or("");
            if head != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = head;
            }
            match value {
                Some(v) => writeln!(out, "{key} = {v}").unwrap(),
                None => writeln!(out, "# {key} unset").unwrap(),
            }
        }
        out
    }

    /// Path from the config or an explicit override, erroring when neither is set.
    pub fn require_manifest(explicit: Option<&Path>, configured: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| configured.clone())
            .ok_or_else(|| Failure::config(format!("no manifest given: set {key} or pass --manifest")))
    }
}
