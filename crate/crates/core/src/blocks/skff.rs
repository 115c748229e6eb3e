//! Selective kernel feature fusion.
//!
//! Branches are summed, squeezed by global average pooling, compressed to a
//! compact descriptor, expanded once per branch and normalised with a
//! softmax across branches. The output is the attention-weighted sum of the
//! branches.

use super::layers::{Conv, PRelu};
use super::params::{Bound, ParamBuilder};
use crate::error::{shape_err, Error, Result};
use crate::tensor::{Scalar, Tape, Var};

/// Width of the compact descriptor: one eighth of the channels, at least 4.
pub fn reduction_width(channels: usize) -> usize {
    (channels / 8).max(4)
}

#[derive(Clone, Debug)]
pub struct Skff {
    pub channels: usize,
    pub reduction: usize,
    pub downscale: Conv,
    /// Single slope shared across the descriptor.
    pub act: PRelu,
    pub upscales: Vec<Conv>,
}

impl Skff {
    pub fn new<T: Scalar>(b: &mut ParamBuilder<'_, T>, name: &str, channels: usize, branches: usize) -> Self {
        let reduction = reduction_width(channels);
        b.scoped(name, |b| Skff {
            channels,
            reduction,
            downscale: Conv::new(b, "downscale", channels, reduction, 1, false),
            act: PRelu::new(b, "act", 1),
            upscales: (0..branches).map(|i| Conv::new(b, &format!("upscale{i}"), reduction, channels, 1, false)).collect(),
        })
    }

    pub fn branches(&self) -> usize {
        self.upscales.len()
    }

    fn check_inputs<T: Scalar>(&self, tape: &Tape<T>, inputs: &[Var]) -> Result<()> {
        if inputs.len() != self.upscales.len() {
            return Err(Error::Config(format!(
                "SKFF built for {} branches received {}",
                self.upscales.len(),
                inputs.len()
            )));
        }
        let shape = tape.shape(inputs[0]);
        if let Some(other) = inputs.iter().map(|&v| tape.shape(v)).find(|&s| s != shape) {
            return shape_err(format!("SKFF inputs differ in shape: {shape} vs {other}"));
        }
        if shape.channels != self.channels {
            return shape_err(format!("SKFF expects {} channels, got {shape}", self.channels));
        }
        Ok(())
    }

    /// Per-branch attention weights `(N, C, 1, 1)`, summing to one across branches.
    pub fn weights<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, inputs: &[Var]) -> Result<Vec<Var>> {
        self.check_inputs(tape, inputs)?;
        let mut fused = inputs[0];
        for &l in &inputs[1..] {
            fused = tape.add(fused, l)?;
        }
        let s = tape.global_avg_pool(fused)?;
        let z = self.downscale.forward(tape, p, s)?;
        let z = self.act.forward(tape, p, z)?;
        let logits = self
            .upscales
            .iter()
            .map(|up| up.forward(tape, p, z))
            .collect::<Result<Vec<_>>>()?;
        tape.branch_softmax(&logits)
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, inputs: &[Var]) -> Result<Var> {
        let weights = self.weights(tape, p, inputs)?;
        // sum_i s_i L_i, written relative to the last branch using sum_i s_i = 1.
        // Equal branches then come back unchanged bit for bit.
        let k = inputs.len();
        let anchor = inputs[k - 1];
        let mut out = anchor;
        for i in 0..k - 1 {
            let delta = tape.sub(inputs[i], anchor)?;
            let term = tape.mul(delta, weights[i])?;
            out = tape.add(out, term)?;
        }
        Ok(out)
    }
}

/// How the MRB merges streams that have been resized to a common resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FusionKind {
    Skff,
    Sum,
    Concat,
}

impl FusionKind {
    pub fn name(self) -> &'static str {
        match self {
            FusionKind::Skff => "skff",
            FusionKind::Sum => "sum",
            FusionKind::Concat => "concat",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "skff" => Some(FusionKind::Skff),
            "sum" => Some(FusionKind::Sum),
            "concat" => Some(FusionKind::Concat),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Fusion {
    /// Single stream: nothing to fuse.
    Identity,
    Sum,
    /// Channel concatenation followed by a bias-free 1x1 conv `kC -> C`.
    Concat(Conv),
    Skff(Skff),
}

impl Fusion {
    pub fn new<T: Scalar>(b: &mut ParamBuilder<'_, T>, name: &str, kind: FusionKind, channels: usize, branches: usize) -> Self {
        if branches < 2 {
            return Fusion::Identity;
        }
        match kind {
            FusionKind::Skff => Fusion::Skff(Skff::new(b, name, channels, branches)),
            FusionKind::Sum => Fusion::Sum,
            FusionKind::Concat => {
                Fusion::Concat(b.scoped(name, |b| Conv::new(b, "proj", channels * branches, channels, 1, false)))
            }
        }
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, inputs: &[Var]) -> Result<Var> {
        match self {
            Fusion::Identity => match inputs {
                [single] => Ok(*single),
                _ => Err(Error::Config(format!("identity fusion received {} inputs", inputs.len()))),
            },
            Fusion::Sum => {
                let mut out = inputs[0];
                for &v in &inputs[1..] {
                    out = tape.add(out, v)?;
                }
                Ok(out)
            }
            Fusion::Concat(proj) => {
                let cat = tape.concat(inputs)?;
                proj.forward(tape, p, cat)
            }
            Fusion::Skff(skff) => skff.forward(tape, p, inputs),
        }
    }
}
