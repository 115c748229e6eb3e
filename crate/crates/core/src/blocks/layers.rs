use super::params::{Bound, ParamBuilder, ParamId};
use crate::error::Result;
use crate::tensor::{Scalar, Tape, Var};

/// Square-kernel convolution with "same" zero padding.
#[derive(Clone, Debug)]
pub struct Conv {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
}

impl Conv {
    pub fn new<T: Scalar>(
        b: &mut ParamBuilder<'_, T>,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        bias: bool,
    ) -> Self {
        b.scoped(name, |b| {
            let weight = b.conv_weight(out_channels, in_channels, kernel);
            let bias = bias.then(|| b.vector("bias", out_channels, 0.0));
            Conv { weight, bias, in_channels, out_channels, kernel }
        })
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
        tape.conv2d(x, p.var(self.weight), self.bias.map(|b| p.var(b)), 1, self.kernel / 2)
    }

    pub fn ids(&self) -> Vec<ParamId> {
        std::iter::once(self.weight).chain(self.bias).collect()
    }
}

/// PReLU whose slope is per channel, or one shared value when built with `channels == 1`.
#[derive(Clone, Debug)]
pub struct PRelu {
    pub slope: ParamId,
}

pub const PRELU_INIT: f64 = 0.25;

impl PRelu {
    pub fn new<T: Scalar>(b: &mut ParamBuilder<'_, T>, name: &str, channels: usize) -> Self {
        b.scoped(name, |b| PRelu { slope: b.vector("slope", channels, PRELU_INIT) })
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
        tape.prelu(x, p.var(self.slope))
    }
}
