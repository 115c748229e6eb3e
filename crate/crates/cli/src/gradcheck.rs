//! Double-precision finite-difference checks over every block.

use std::fmt::Write as _;

use mirnet_core::blocks::{
    grad_check_block, probe_loss, Bound, ChannelAttention, Conv, Dau, Direction, FusionKind, Mirnet, Mrb,
    NetworkConfig, PRelu, ParamBuilder, ParamStore, Resize, Rrg, Skff, SpatialAttention, SPATIAL_KERNEL,
};
use mirnet_core::optim::{charbonnier_loss, CharbonnierConfig, LossMode};
use mirnet_core::tensor::{grad_check_many, GradCheckOptions, GradCheckReport, Shape, Tape, Tensor, Var};

use crate::failure::Result;

pub const TOLERANCE: f64 = 1e-4;

/// Deliberate defects for negative-control runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradFault {
    /// Doubles the gradient flowing back through the DAU output.
    Dau,
}

impl GradFault {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dau" => Some(GradFault::Dau),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlockCheck {
    pub name: &'static str,
    pub report: GradCheckReport,
}

pub const BLOCKS: &[&str] = &[
    "conv",
    "prelu",
    "sigmoid",
    "gap",
    "channel_pool",
    "branch_softmax",
    "skff",
    "channel_attention",
    "spatial_attention",
    "dau",
    "resize_down",
    "resize_up",
    "mrb",
    "rrg",
    "network",
    "charbonnier_mean",
    "charbonnier_global",
];

fn shape(n: usize, c: usize, h: usize, w: usize) -> Shape {
    Shape::new(n, c, h, w).expect("positive extents")
}

fn rand(s: Shape, seed: u64) -> Tensor<f64> {
    Tensor::uniform(s, -1.0, 1.0, seed)
}

/// Fresh parameters, shifted off their initial values so zero biases and
/// constant slopes do not mask terms of the backward pass.
fn build<B>(seed: u64, f: impl FnOnce(&mut ParamBuilder<'_, f64>) -> B) -> (B, ParamStore<f64>) {
    let mut store = ParamStore::new();
    let block = f(&mut ParamBuilder::new(&mut store, seed));
    let ids: Vec<_> = store.ids().collect();
    for (k, id) in ids.into_iter().enumerate() {
        let t = store.get_mut(id);
        let noise: Tensor<f64> = Tensor::uniform(t.shape(), -0.2, 0.2, 1000 + seed * 97 + k as u64);
        for (v, d) in t.data_mut().iter_mut().zip(noise.data()) {
            *v += d;
        }
    }
    (block, store)
}

fn op_check(inputs: &[Tensor<f64>], f: impl Fn(&mut Tape<f64>, &[Var]) -> mirnet_core::Result<Var>) -> Result<GradCheckReport> {
    let opts = GradCheckOptions { tolerance: TOLERANCE, seed: 7, ..GradCheckOptions::default() };
    Ok(grad_check_many(|t, v| {
        let y = f(t, v)?;
        probe_loss(t, y, 11)
    }, inputs, &opts)?)
}

fn block_check(
    params: &ParamStore<f64>,
    inputs: &[Tensor<f64>],
    coords: Option<usize>,
    f: impl Fn(&mut Tape<f64>, &Bound, &[Var]) -> mirnet_core::Result<Var>,
) -> Result<GradCheckReport> {
    let opts = GradCheckOptions { tolerance: TOLERANCE, max_coords_per_input: coords, seed: 7, ..GradCheckOptions::default() };
    Ok(grad_check_block(params, inputs, &opts, f)?)
}

fn check(name: &str, fault: Option<GradFault>) -> Result<GradCheckReport> {
    match name {
        "conv" => op_check(&[rand(shape(2, 3, 6, 5), 1), rand(shape(4, 3, 3, 3), 2), rand(shape(1, 4, 1, 1), 3)], |t, v| {
            let a = t.conv2d(v[0], v[1], Some(v[2]), 1, 1)?;
            let b = t.conv2d(v[0], v[1], None, 2, 1)?;
            let (sa, sb) = (probe_loss(t, a, 1)?, probe_loss(t, b, 2)?);
            t.add(sa, sb)
        }),
        "prelu" => op_check(&[rand(shape(2, 3, 4, 4), 4), rand(shape(1, 3, 1, 1), 5).reshape(Shape::vector(3)?)?], |t, v| {
            t.prelu(v[0], v[1])
        }),
        "sigmoid" => op_check(&[rand(shape(2, 3, 4, 4), 6)], |t, v| t.sigmoid(v[0])),
        "gap" => op_check(&[rand(shape(2, 3, 5, 4), 7)], |t, v| t.global_avg_pool(v[0])),
        "channel_pool" => op_check(&[rand(shape(2, 4, 4, 4), 8)], |t, v| t.channel_pool(v[0])),
        "branch_softmax" => op_check(&[rand(shape(2, 4, 1, 1), 9), rand(shape(2, 4, 1, 1), 10), rand(shape(2, 4, 1, 1), 11)], |t, v| {
            let w = t.branch_softmax(v)?;
            t.concat(&w)
        }),
        "skff" => {
            let (skff, p) = build(1, |b| Skff::new(b, "skff", 4, 3));
            let xs: Vec<_> = (0..3).map(|i| rand(shape(2, 4, 4, 4), 20 + i)).collect();
            block_check(&p, &xs, None, |t, b, v| skff.forward(t, b, v))
        }
        "channel_attention" => {
            let (ca, p) = build(2, |b| ChannelAttention {
                squeeze: Conv::new(b, "squeeze", 8, 4, 1, true),
                act: PRelu::new(b, "act", 4),
                excite: Conv::new(b, "excite", 4, 8, 1, true),
            });
            block_check(&p, &[rand(shape(2, 8, 4, 4), 30)], None, |t, b, v| ca.forward(t, b, v[0]))
        }
        "spatial_attention" => {
            let (sa, p) = build(3, |b| SpatialAttention { conv: Conv::new(b, "conv", 2, 1, SPATIAL_KERNEL, true) });
            block_check(&p, &[rand(shape(2, 4, 6, 6), 31)], None, |t, b, v| sa.forward(t, b, v[0]))
        }
        "dau" => {
            let (dau, p) = build(4, |b| Dau::new(b, "dau", 4));
            block_check(&p, &[rand(shape(1, 4, 6, 6), 32)], Some(40), |t, b, v| {
                let y = dau.forward(t, b, v[0])?;
                match fault {
                    Some(GradFault::Dau) => t.grad_scale(y, 2.0),
                    None => Ok(y),
                }
            })
        }
        "resize_down" | "resize_up" => {
            let (dir, c) = if name == "resize_down" { (Direction::Down, 2) } else { (Direction::Up, 4) };
            let (rs, p) = build(5, |b| Resize::new(b, "resize", dir, c));
            block_check(&p, &[rand(shape(1, c, 6, 4), 33)], None, |t, b, v| rs.forward(t, b, v[0]))
        }
        "mrb" => {
            let (mrb, p) = build(6, |b| Mrb::new(b, "mrb", 2, 2, 2, FusionKind::Skff));
            block_check(&p, &[rand(shape(1, 2, 4, 4), 34)], Some(12), |t, b, v| mrb.forward(t, b, v[0]))
        }
        "rrg" | "network" => {
            let cfg = NetworkConfig { base_channels: 2, ..NetworkConfig::desk() };
            if name == "rrg" {
                let (rrg, p) = build(7, |b| Rrg::new(b, "rrg", &cfg));
                block_check(&p, &[rand(shape(1, 2, 4, 4), 35)], Some(12), |t, b, v| rrg.forward(t, b, v[0]))
            } else {
                let (net, p) = build(8, |b| Mirnet::new(b, &cfg));
                let net = net?;
                block_check(&p, &[rand(shape(1, 3, 4, 4), 36)], Some(8), |t, b, v| net.forward(t, b, v[0]))
            }
        }
        "charbonnier_mean" | "charbonnier_global" => {
            let mode = if name == "charbonnier_mean" { LossMode::PerPixelMean } else { LossMode::GlobalNorm };
            let cfg = CharbonnierConfig { mode, ..CharbonnierConfig::default() };
            let opts = GradCheckOptions { tolerance: TOLERANCE, ..GradCheckOptions::default() };
            Ok(grad_check_many(
                |t, v| charbonnier_loss(t, v[0], v[1], &cfg),
                &[rand(shape(2, 3, 4, 4), 37), rand(shape(2, 3, 4, 4), 38)],
                &opts,
            )?)
        }
        other => unreachable!("no gradient check for {other}"),
    }
}

/// Runs every check in [`BLOCKS`] order.
pub fn run_suite(fault: Option<GradFault>) -> Result<Vec<BlockCheck>> {
    BLOCKS.iter().map(|&name| Ok(BlockCheck { name, report: check(name, fault)? })).collect()
}

pub fn format_report(checks: &[BlockCheck]) -> String {
    let mut out = String::from("block\tmax_rel_error\tcoordinates\tstatus\n");
    for c in checks {
        let status = if c.report.passed { "ok" } else { "FAIL" };
        writeln!(out, "{}\t{:.3e}\t{}\t{status}", c.name, c.report.max_rel_error, c.report.coordinates).unwrap();
    }
    out
}

pub fn failing(checks: &[BlockCheck]) -> Vec<&'static str> {
    checks.iter().filter(|c| !c.report.passed).map(|c| c.name).collect()
}
