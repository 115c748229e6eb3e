use super::layers::Conv;
use super::mrb::Mrb;
use super::params::{Bound, ParamBuilder, ParamStore};
use super::skff::FusionKind;
use crate::error::{shape_err, Error, Result};
use crate::tensor::{Scalar, Tape, Var};

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub n_rrg: usize,
    pub mrb_per_rrg: usize,
    /// Parallel resolution streams per MRB ("rows").
    pub n_streams: usize,
    /// DAU columns per MRB ("cols").
    pub n_columns: usize,
    pub base_channels: usize,
    pub image_channels: usize,
    pub fusion: FusionKind,
}

impl NetworkConfig {
    /// Full-size configuration: 3 groups of 2 blocks, 3 streams (64/128/256 channels), 2 columns.
    pub fn full() -> Self {
        NetworkConfig {
            n_rrg: 3,
            mrb_per_rrg: 2,
            n_streams: 3,
            n_columns: 2,
            base_channels: 64,
            image_channels: 3,
            fusion: FusionKind::Skff,
        }
    }

    /// Laptop-scale configuration used by the default run configs.
    pub fn desk() -> Self {
        NetworkConfig {
            n_rrg: 1,
            mrb_per_rrg: 1,
            n_streams: 2,
            n_columns: 1,
            base_channels: 8,
            image_channels: 3,
            fusion: FusionKind::Skff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("n_rrg", self.n_rrg),
            ("mrb_per_rrg", self.mrb_per_rrg),
            ("n_streams", self.n_streams),
            ("n_columns", self.n_columns),
            ("base_channels", self.base_channels),
            ("image_channels", self.image_channels),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(Error::Config(format!("network.{name} must be >= 1")));
            }
        }
        if self.n_streams > 8 {
            return Err(Error::Config("network.n_streams must be <= 8".into()));
        }
        Ok(())
    }

    /// Spatial extents of the input must be multiples of this.
    pub fn divisibility(&self) -> usize {
        1 << (self.n_streams - 1)
    }

    /// Channel width of stream `s`.
    pub fn stream_channels(&self, s: usize) -> usize {
        self.base_channels << s
    }
}

/// Recursive residual group: `x + conv(MRB_k(... MRB_1(conv(x))))`.
#[derive(Clone, Debug)]
pub struct Rrg {
    pub conv_in: Conv,
    pub mrbs: Vec<Mrb>,
    pub conv_out: Conv,
}

impl Rrg {
    pub fn new<T: Scalar>(b: &mut ParamBuilder<'_, T>, name: &str, cfg: &NetworkConfig) -> Self {
        let c = cfg.base_channels;
        b.scoped(name, |b| Rrg {
            conv_in: Conv::new(b, "conv_in", c, c, 3, true),
            mrbs: (0..cfg.mrb_per_rrg)
                .map(|i| Mrb::new(b, &format!("mrb{i}"), c, cfg.n_streams, cfg.n_columns, cfg.fusion))
                .collect(),
            conv_out: Conv::new(b, "conv_out", c, c, 3, true),
        })
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
        let mut h = self.conv_in.forward(tape, p, x)?;
        for mrb in &self.mrbs {
            h = mrb.forward(tape, p, h)?;
        }
        let r = self.conv_out.forward(tape, p, h)?;
        tape.add(x, r)
    }
}

/// Shallow conv, `N` groups, residual conv and the global skip `I + R`.
#[derive(Clone, Debug)]
pub struct Mirnet {
    pub config: NetworkConfig,
    pub head: Conv,
    pub rrgs: Vec<Rrg>,
    pub tail: Conv,
}

impl Mirnet {
    pub fn new<T: Scalar>(b: &mut ParamBuilder<'_, T>, cfg: &NetworkConfig) -> Result<Self> {
        cfg.validate()?;
        let (c, img) = (cfg.base_channels, cfg.image_channels);
        Ok(Mirnet {
            config: cfg.clone(),
            head: Conv::new(b, "head", img, c, 3, true),
            rrgs: (0..cfg.n_rrg).map(|i| Rrg::new(b, &format!("rrg{i}"), cfg)).collect(),
            tail: Conv::new(b, "tail", c, img, 3, true),
        })
    }

    /// Builds the network together with freshly initialised parameters.
    pub fn build<T: Scalar>(cfg: &NetworkConfig, seed: u64) -> Result<(Self, ParamStore<T>)> {
        let mut store = ParamStore::new();
        let net = Mirnet::new(&mut ParamBuilder::new(&mut store, seed), cfg)?;
        Ok((net, store))
    }

    pub fn check_input(&self, shape: crate::tensor::Shape) -> Result<()> {
        if shape.channels != self.config.image_channels {
            return shape_err(format!(
                "network expects {} image channels, got {shape}",
                self.config.image_channels
            ));
        }
        let d = self.config.divisibility();
        if shape.height % d != 0 || shape.width % d != 0 {
            return shape_err(format!(
                "image extents must be divisible by {d} for {} streams, got {}x{}",
                self.config.n_streams, shape.height, shape.width
            ));
        }
        Ok(())
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, image: Var) -> Result<Var> {
        self.check_input(tape.shape(image))?;
        let mut h = self.head.forward(tape, p, image)?;
        for rrg in &self.rrgs {
            h = rrg.forward(tape, p, h)?;
        }
        let r = self.tail.forward(tape, p, h)?;
        tape.add(image, r)
    }
}
