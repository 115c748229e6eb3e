//! Multi-scale residual block.
//!
//! Stream `s` runs at `1 / 2^s` resolution with `base * 2^s` channels. Each
//! column applies one DAU per stream; between columns every stream receives
//! the fusion of all streams resized to its own resolution. After the last
//! column all streams are brought back to full resolution, fused once more,
//! passed through a 3x3 conv and added to the block input.

use super::dau::Dau;
use super::layers::Conv;
use super::params::{Bound, ParamBuilder};
use super::resize::ResizeChain;
use super::skff::{Fusion, FusionKind};
use crate::error::{shape_err, Result};
use crate::tensor::{Scalar, Tape, Var};

#[derive(Clone, Debug)]
pub struct Exchange {
    /// `inputs[i]` resizes stream `i` to the receiving stream; identity for the receiver itself.
    pub inputs: Vec<ResizeChain>,
    pub fusion: Fusion,
}

#[derive(Clone, Debug)]
pub struct Mrb {
    pub channels: usize,
    pub streams: usize,
    pub columns: usize,
    pub entry: Vec<ResizeChain>,
    /// `daus[column][stream]`
    pub daus: Vec<Vec<Dau>>,
    /// `exchange[boundary][receiving stream]`
    pub exchange: Vec<Vec<Exchange>>,
    pub exit: Vec<ResizeChain>,
    pub final_fusion: Fusion,
    pub final_conv: Conv,
}

impl Mrb {
    pub fn new<T: Scalar>(
        b: &mut ParamBuilder<'_, T>,
        name: &str,
        channels: usize,
        streams: usize,
        columns: usize,
        fusion: FusionKind,
    ) -> Self {
        assert!(streams >= 1 && columns >= 1, "MRB needs at least one stream and one column");
        b.scoped(name, |b| {
            let entry = (0..streams).map(|s| ResizeChain::between(b, &format!("entry{s}"), channels, 0, s)).collect();
            let daus = (0..columns)
                .map(|c| (0..streams).map(|s| Dau::new(b, &format!("col{c}.dau{s}"), channels << s)).collect())
                .collect();
            let exchange = (0..columns - 1)
                .map(|c| {
                    (0..streams)
                        .map(|j| {
                            b.scoped(&format!("fuse{c}"), |b| Exchange {
                                inputs: (0..streams)
                                    .map(|i| ResizeChain::between(b, &format!("to{j}.from{i}"), channels, i, j))
                                    .collect(),
                                fusion: Fusion::new(b, &format!("skff{j}"), fusion, channels << j, streams),
                            })
                        })
                        .collect()
                })
                .collect();
            let exit = (0..streams).map(|s| ResizeChain::between(b, &format!("exit{s}"), channels, s, 0)).collect();
            let final_fusion = Fusion::new(b, "skff_final", fusion, channels, streams);
            let final_conv = Conv::new(b, "final_conv", channels, channels, 3, true);
            Mrb { channels, streams, columns, entry, daus, exchange, exit, final_fusion, final_conv }
        })
    }

    /// Spatial extents must be multiples of this.
    pub fn divisibility(&self) -> usize {
        1 << (self.streams - 1)
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, p: &Bound, x: Var) -> Result<Var> {
        let shape = tape.shape(x);
        if shape.channels != self.channels {
            return shape_err(format!("MRB expects {} channels, got {shape}", self.channels));
        }
        let d = self.divisibility();
        if shape.height % d != 0 || shape.width % d != 0 {
            return shape_err(format!(
                "spatial extents must be divisible by {d} for {} streams, got {shape}",
                self.streams
            ));
        }
        let mut streams = self
            .entry
            .iter()
            .map(|chain| chain.forward(tape, p, x))
            .collect::<Result<Vec<_>>>()?;
        for (c, column) in self.daus.iter().enumerate() {
            for (s, dau) in column.iter().enumerate() {
                streams[s] = dau.forward(tape, p, streams[s])?;
            }
            if let Some(boundary) = self.exchange.get(c) {
                let mut next = Vec::with_capacity(self.streams);
                for ex in boundary {
                    let inputs = ex
                        .inputs
                        .iter()
                        .zip(&streams)
                        .map(|(chain, &v)| chain.forward(tape, p, v))
                        .collect::<Result<Vec<_>>>()?;
                    next.push(ex.fusion.forward(tape, p, &inputs)?);
                }
                streams = next;
            }
        }
        let full = self
            .exit
            .iter()
            .zip(&streams)
            .map(|(chain, &v)| chain.forward(tape, p, v))
            .collect::<Result<Vec<_>>>()?;
        let fused = self.final_fusion.forward(tape, p, &full)?;
        let r = self.final_conv.forward(tape, p, fused)?;
        tape.add(x, r)
    }
}
