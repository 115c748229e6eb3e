//! Residual resizing modules.
//!
//! Down: main path `1x1 -> PReLU -> 3x3 -> blur-pool -> 1x1 (C -> 2C)` plus
//! skip path `blur-pool -> 1x1 (C -> 2C)`.
//! Up: the same with 2x bilinear upsampling and `C -> C/2` output convs.

use super::layers::{Conv, PRelu};
use super::params::{Bound, ParamBuilder};
use crate::error::{shape_err, Result};
use crate::tensor::{Scalar, Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Down,
    Up,
}

#[derive(Clone, Debug)]
pub struct Resize {
    pub direction: Direction,
    pub in_channels: usize,
    pub out_channels: usize,
    pub main1: Conv,
    pub act: PRelu,
    pub main2: Conv,
    pub main3: Conv,
    pub skip: Conv,
}

impl Resize {
    pub fn new<T: Scalar>(b: &mut ParamBuilder<'_, T>, name: &str, direction: Direction, channels: usize) -> Self {
        let out = match direction {
            Direction::Down => channels * 2,
            Direction::Up => {
                assert!(channels % 2 == 0, "upsampling module needs an even channel count");
                channels / 2
            }
        };
        b.scoped(name, |b| Resize {
            direction,
            in_channels: channels,
            out_channels: out,
            main1: Conv::new(b, "main1", channels, channels, 1, false),
            act: PRelu::new(b, "act", channels),
            main2: Conv::new(b, "main2", channels, channels, 3, false),
            main3: Conv::new(b, "main3", channels, out, 1, false),
            skip: Conv::new(b, "skip", channels, out, 1, false),
        })
    }

    fn resample<T: Scalar>(&self, tape: &mut Tape<T>, x: Var) -> Result<Var> {
        match self.direction {
            Direction::Down => tape.blur_pool(x),
            Direction::Up => tape.upsample2x(x),
        }
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
        let shape = tape.shape(x);
        if shape.channels != self.in_channels {
            return shape_err(format!("resize module expects {} channels, got {shape}", self.in_channels));
        }
        if self.direction == Direction::Down && (shape.height % 2 != 0 || shape.width % 2 != 0) {
            return shape_err(format!("downsampling needs even spatial extents, got {shape}"));
        }
        let h = self.main1.forward(tape, p, x)?;
        let h = self.act.forward(tape, p, h)?;
        let h = self.main2.forward(tape, p, h)?;
        let h = self.resample(tape, h)?;
        let main = self.main3.forward(tape, p, h)?;
        let s = self.resample(tape, x)?;
        let skip = self.skip.forward(tape, p, s)?;
        tape.add(main, skip)
    }
}

/// Consecutive resize modules, e.g. two downsamplers for a 4x reduction.
#[derive(Clone, Debug, Default)]
pub struct ResizeChain {
    pub steps: Vec<Resize>,
}

impl ResizeChain {
    /// Modules taking width `channels` at stream `from` to stream `to`.
    pub fn between<T: Scalar>(b: &mut ParamBuilder<'_, T>, name: &str, base: usize, from: usize, to: usize) -> Self {
        b.scoped(name, |b| {
            let steps = if from < to {
                (from..to).map(|s| Resize::new(b, &format!("down{}", s - from), Direction::Down, base << s)).collect()
            } else {
                (to + 1..=from)
                    .rev()
                    .enumerate()
                    .map(|(i, s)| Resize::new(b, &format!("up{i}"), Direction::Up, base << s))
                    .collect()
            };
            ResizeChain { steps }
        })
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, mut x: Var) -> Result<Var> {
        for step in &self.steps {
            x = step.forward(tape, p, x)?;
        }
        Ok(x)
    }
}
