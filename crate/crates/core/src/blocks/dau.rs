//! Dual attention unit: channel (squeeze-excitation) and spatial attention
//! applied in parallel to a conv feature map, merged and added back.

use super::layers::{Conv, PRelu};
use super::params::{Bound, ParamBuilder};
use crate::error::{shape_err, Result};
use crate::tensor::{Scalar, Tape, Var};

/// Kernel extent of the spatial attention conv.
pub const SPATIAL_KERNEL: usize = 5;

/// Channel-attention bottleneck: one eighth of the channels, at least 4.
pub fn bottleneck_width(channels: usize) -> usize {
    (channels / 8).max(4)
}

#[derive(Clone, Debug)]
pub struct ChannelAttention {
    pub squeeze: Conv,
    pub act: PRelu,
    pub excite: Conv,
}

impl ChannelAttention {
    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, m: Var) -> Result<Var> {
        let d = tape.global_avg_pool(m)?;
        let h = self.squeeze.forward(tape, p, d)?;
        let h = self.act.forward(tape, p, h)?;
        let h = self.excite.forward(tape, p, h)?;
        let gate = tape.sigmoid(h)?;
        tape.mul(m, gate)
    }
}

#[derive(Clone, Debug)]
pub struct SpatialAttention {
    pub conv: Conv,
}

impl SpatialAttention {
    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, m: Var) -> Result<Var> {
        let f = tape.channel_pool(m)?;
        let f = self.conv.forward(tape, p, f)?;
        let gate = tape.sigmoid(f)?;
        tape.mul(m, gate)
    }
}

#[derive(Clone, Debug)]
pub struct Dau {
    pub channels: usize,
    pub head1: Conv,
    pub head_act: PRelu,
    pub head2: Conv,
    pub ca: ChannelAttention,
    pub sa: SpatialAttention,
    pub merge: Conv,
}

impl Dau {
    pub fn new<T: Scalar>(b: &mut ParamBuilder<'_, T>, name: &str, channels: usize) -> Self {
        let width = bottleneck_width(channels);
        b.scoped(name, |b| Dau {
            channels,
            head1: Conv::new(b, "head1", channels, channels, 3, true),
            head_act: PRelu::new(b, "head_act", channels),
            head2: Conv::new(b, "head2", channels, channels, 3, true),
            ca: b.scoped("ca", |b| ChannelAttention {
                squeeze: Conv::new(b, "squeeze", channels, width, 1, true),
                act: PRelu::new(b, "act", width),
                excite: Conv::new(b, "excite", width, channels, 1, true),
            }),
            sa: b.scoped("sa", |b| SpatialAttention { conv: Conv::new(b, "conv", 2, 1, SPATIAL_KERNEL, true) }),
            merge: Conv::new(b, "merge", 2 * channels, channels, 1, true),
        })
    }

    /// Feature map fed to both attention branches.
    pub fn head<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
        let h = self.head1.forward(tape, p, x)?;
        let h = self.head_act.forward(tape, p, h)?;
        self.head2.forward(tape, p, h)
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
        let shape = tape.shape(x);
        if shape.channels != self.channels {
            return shape_err(format!("DAU expects {} channels, got {shape}", self.channels));
        }
        let m = self.head(tape, p, x)?;
        let ca = self.ca.forward(tape, p, m)?;
        let sa = self.sa.forward(tape, p, m)?;
        let cat = tape.concat(&[ca, sa])?;
        let r = self.merge.forward(tape, p, cat)?;
        tape.add(x, r)
    }
}
