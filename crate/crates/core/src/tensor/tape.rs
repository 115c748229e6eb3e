use std::sync::atomic::{AtomicU64, Ordering};

use super::kernels::{self, ConvGeom};
use super::{Scalar, Shape, Tensor};
use crate::error::{contract_err, shape_err, Result};

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    tape: u64,
    index: usize,
}

impl Var {
    pub fn index(&self) -> usize {
        self.index
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum LossReduction {
    PerPixelMean,
    GlobalNorm,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Conv2d { x: usize, w: usize, b: Option<usize>, geom: ConvGeom },
    Prelu { x: usize, slope: usize },
    Sigmoid { x: usize },
    GlobalAvgPool { x: usize },
    ChannelPool { x: usize, argmax: Vec<u32> },
    /// Output `which` of a softmax taken across `inputs`; sibling outputs are
    /// the `inputs.len()` nodes starting at `first`.
    BranchSoftmax { inputs: Vec<usize>, first: usize, which: usize },
    Add { a: usize, b: usize },
    Sub { a: usize, b: usize },
    Mul { a: usize, b: usize, strides: [usize; 4] },
    Concat { inputs: Vec<usize> },
    BlurPool { x: usize },
    Upsample2x { x: usize },
    Charbonnier { pred: usize, target: usize, eps: f64, reduction: LossReduction },
    Sum { x: usize },
    Scale { x: usize, factor: f64 },
    GradScale { x: usize, factor: f64 },
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op,
    requires_grad: bool,
}

/// Records operations in execution order so that gradients can be replayed
/// backwards from a scalar loss.
#[derive(Debug)]
pub struct Tape<T> {
    id: u64,
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients<T> {
    tape: u64,
    shapes: Vec<Shape>,
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient with respect to `var`; zero when `var` does not influence the loss.
    pub fn get(&self, var: Var) -> Tensor<T> {
        assert_eq!(var.tape, self.tape, "variable belongs to a different tape");
        let shape = self.shapes[var.index];
        match &self.grads[var.index] {
            Some(g) => Tensor::from_vec(shape, g.clone()).expect("gradient matches shape"),
            None => Tensor::zeros(shape),
        }
    }

    /// Borrowing variant of [`Gradients::get`]; `None` means zero.
    pub fn raw(&self, var: Var) -> Option<&[T]> {
        assert_eq!(var.tape, self.tape, "variable belongs to a different tape");
        self.grads[var.index].as_deref()
    }
}

fn accumulate<'a, T: Scalar>(grads: &'a mut [Option<Vec<T>>], shapes: &[Shape], index: usize) -> &'a mut Vec<T> {
    grads[index].get_or_insert_with(|| vec![T::zero(); shapes[index].numel()])
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + s;
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed), nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, var: Var) -> Result<usize> {
        if var.tape != self.id || var.index >= self.nodes.len() {
            return contract_err("variable was not recorded on this tape");
        }
        Ok(var.index)
    }

    fn push(&mut self, value: Tensor<T>, op: Op, requires_grad: bool) -> Var {
        debug_assert!(value.data().iter().all(|v| !v.is_nan()), "NaN produced by {op:?}");
        self.nodes.push(Node { value, op, requires_grad });
        Var { tape: self.id, index: self.nodes.len() - 1 }
    }

    fn rg(&self, i: usize) -> bool {
        self.nodes[i].requires_grad
    }

    /// Records a leaf value. Gradients are only tracked when `requires_grad` is set.
    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn variable(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn value(&self, var: Var) -> &Tensor<T> {
        assert_eq!(var.tape, self.id, "variable belongs to a different tape");
        &self.nodes[var.index].value
    }

    pub fn shape(&self, var: Var) -> Shape {
        self.value(var).shape()
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.index].requires_grad
    }

    /// Zero-padded cross-correlation. `weight` is `(out_c, in_c, kh, kw)`;
    /// `bias` holds `out_c` elements.
    pub fn conv2d(&mut self, x: Var, weight: Var, bias: Option<Var>, stride: usize, padding: usize) -> Result<Var> {
        let (xi, wi) = (self.check(x)?, self.check(weight)?);
        let bi = bias.map(|b| self.check(b)).transpose()?;
        let geom = ConvGeom::new(self.nodes[xi].value.shape(), self.nodes[wi].value.shape(), stride, padding)?;
        if let Some(bi) = bi {
            if self.nodes[bi].value.len() != geom.out_c {
                return shape_err(format!(
                    "conv2d bias has {} elements, expected {}",
                    self.nodes[bi].value.len(),
                    geom.out_c
                ));
            }
        }
        let out = kernels::conv2d_forward(
            &geom,
            self.nodes[xi].value.data(),
            self.nodes[wi].value.data(),
            bi.map(|b| self.nodes[b].value.data()),
        );
        let rg = self.rg(xi) || self.rg(wi) || bi.is_some_and(|b| self.rg(b));
        let value = Tensor::from_vec(geom.output_shape(), out)?;
        Ok(self.push(value, Op::Conv2d { x: xi, w: wi, b: bi, geom }, rg))
    }

    /// Parametric ReLU. `slope` holds one value per channel, or a single
    /// value shared by all channels.
    pub fn prelu(&mut self, x: Var, slope: Var) -> Result<Var> {
        let (xi, si) = (self.check(x)?, self.check(slope)?);
        let shape = self.nodes[xi].value.shape();
        let slopes = self.nodes[si].value.data();
        if slopes.len() != shape.channels && slopes.len() != 1 {
            return shape_err(format!(
                "prelu slope has {} elements, input has {} channels",
                slopes.len(),
                shape.channels
            ));
        }
        let plane = shape.plane();
        let xs = self.nodes[xi].value.data();
        let out: Vec<T> = xs
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let a = if slopes.len() == 1 { slopes[0] } else { slopes[(i / plane) % shape.channels] };
                if v >= T::zero() {
                    v
                } else {
                    a * v
                }
            })
            .collect();
        let rg = self.rg(xi) || self.rg(si);
        Ok(self.push(Tensor::from_vec(shape, out)?, Op::Prelu { x: xi, slope: si }, rg))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let xi = self.check(x)?;
        let value = self.nodes[xi].value.map(|v| T::one() / (T::one() + (-v).exp()));
        let rg = self.rg(xi);
        Ok(self.push(value, Op::Sigmoid { x: xi }, rg))
    }

    /// Spatial mean per channel, `(N, C, H, W) -> (N, C, 1, 1)`.
    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var> {
        let xi = self.check(x)?;
        let shape = self.nodes[xi].value.shape();
        let inv = T::from_usize(shape.plane()).unwrap().recip();
        let out: Vec<T> = self.nodes[xi]
            .value
            .data()
            .chunks(shape.plane())
            .map(|p| p.iter().fold(T::zero(), |a, &v| a + v) * inv)
            .collect();
        let out_shape = Shape { height: 1, width: 1, ..shape };
        let rg = self.rg(xi);
        Ok(self.push(Tensor::from_vec(out_shape, out)?, Op::GlobalAvgPool { x: xi }, rg))
    }

    /// Per-position mean and max over channels, `(N, C, H, W) -> (N, 2, H, W)`.
    pub fn channel_pool(&mut self, x: Var) -> Result<Var> {
        let xi = self.check(x)?;
        let shape = self.nodes[xi].value.shape();
        let (out, argmax) = kernels::channel_pool_forward(shape, self.nodes[xi].value.data());
        let rg = self.rg(xi);
        let value = Tensor::from_vec(Shape { channels: 2, ..shape }, out)?;
        Ok(self.push(value, Op::ChannelPool { x: xi, argmax }, rg))
    }

    /// Softmax across branches at every element position. All logits share a shape.
    pub fn branch_softmax(&mut self, logits: &[Var]) -> Result<Vec<Var>> {
        if logits.len() < 2 {
            return shape_err("branch_softmax needs at least two branches");
        }
        let idx = logits.iter().map(|&v| self.check(v)).collect::<Result<Vec<_>>>()?;
        let shape = self.nodes[idx[0]].value.shape();
        if let Some(&bad) = idx.iter().find(|&&i| self.nodes[i].value.shape() != shape) {
            return shape_err(format!(
                "branch_softmax shape mismatch: {shape} vs {}",
                self.nodes[bad].value.shape()
            ));
        }
        let k = idx.len();
        let mut outs = vec![vec![T::zero(); shape.numel()]; k];
        for p in 0..shape.numel() {
            let m = idx.iter().map(|&i| self.nodes[i].value.data()[p]).fold(T::neg_infinity(), T::max);
            let mut denom = T::zero();
            for (b, &i) in idx.iter().enumerate() {
                let e = (self.nodes[i].value.data()[p] - m).exp();
                outs[b][p] = e;
                denom = denom + e;
            }
            for out in outs.iter_mut() {
                out[p] = out[p] / denom;
            }
        }
        let rg = idx.iter().any(|&i| self.rg(i));
        let first = self.nodes.len();
        let mut vars = Vec::with_capacity(k);
        for (which, out) in outs.into_iter().enumerate() {
            let op = Op::BranchSoftmax { inputs: idx.clone(), first, which };
            vars.push(self.push(Tensor::from_vec(shape, out)?, op, rg));
        }
        Ok(vars)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ai, bi) = (self.check(a)?, self.check(b)?);
        let shape = self.nodes[ai].value.shape();
        if self.nodes[bi].value.shape() != shape {
            return shape_err(format!("add shape mismatch: {shape} vs {}", self.nodes[bi].value.shape()));
        }
        let out: Vec<T> = self.nodes[ai]
            .value
            .data()
            .iter()
            .zip(self.nodes[bi].value.data())
            .map(|(&x, &y)| x + y)
            .collect();
        let rg = self.rg(ai) || self.rg(bi);
        Ok(self.push(Tensor::from_vec(shape, out)?, Op::Add { a: ai, b: bi }, rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ai, bi) = (self.check(a)?, self.check(b)?);
        let shape = self.nodes[ai].value.shape();
        if self.nodes[bi].value.shape() != shape {
            return shape_err(format!("sub shape mismatch: {shape} vs {}", self.nodes[bi].value.shape()));
        }
        let out: Vec<T> = self.nodes[ai]
            .value
            .data()
            .iter()
            .zip(self.nodes[bi].value.data())
            .map(|(&x, &y)| x - y)
            .collect();
        let rg = self.rg(ai) || self.rg(bi);
        Ok(self.push(Tensor::from_vec(shape, out)?, Op::Sub { a: ai, b: bi }, rg))
    }

    /// Elementwise product; `b` may have extent 1 on any axis and is broadcast.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ai, bi) = (self.check(a)?, self.check(b)?);
        let shape = self.nodes[ai].value.shape();
        let strides = kernels::broadcast_strides(shape, self.nodes[bi].value.shape())?;
        let (xa, xb) = (self.nodes[ai].value.data(), self.nodes[bi].value.data());
        let mut out = vec![T::zero(); shape.numel()];
        kernels::for_each_broadcast(shape, strides, |i, j| out[i] = xa[i] * xb[j]);
        let rg = self.rg(ai) || self.rg(bi);
        Ok(self.push(Tensor::from_vec(shape, out)?, Op::Mul { a: ai, b: bi, strides }, rg))
    }

    /// Concatenation along the channel axis.
    pub fn concat(&mut self, inputs: &[Var]) -> Result<Var> {
        if inputs.is_empty() {
            return shape_err("concat needs at least one input");
        }
        let idx = inputs.iter().map(|&v| self.check(v)).collect::<Result<Vec<_>>>()?;
        let first = self.nodes[idx[0]].value.shape();
        let mut channels = 0;
        for &i in &idx {
            let s = self.nodes[i].value.shape();
            if s.batch != first.batch || s.height != first.height || s.width != first.width {
                return shape_err(format!("concat shape mismatch: {first} vs {s}"));
            }
            channels += s.channels;
        }
        let shape = Shape { channels, ..first };
        let mut out = Vec::with_capacity(shape.numel());
        for n in 0..shape.batch {
            for &i in &idx {
                let s = self.nodes[i].value.shape();
                let per = s.channels * s.plane();
                out.extend_from_slice(&self.nodes[i].value.data()[n * per..(n + 1) * per]);
            }
        }
        let rg = idx.iter().any(|&i| self.rg(i));
        Ok(self.push(Tensor::from_vec(shape, out)?, Op::Concat { inputs: idx }, rg))
    }

    /// Anti-aliased 2x downsampling: 3x3 binomial blur (reflect padded), stride 2.
    pub fn blur_pool(&mut self, x: Var) -> Result<Var> {
        let xi = self.check(x)?;
        let shape = self.nodes[xi].value.shape();
        if shape.height % 2 != 0 || shape.width % 2 != 0 {
            return shape_err(format!("blur_pool needs even spatial extents, got {shape}"));
        }
        let (out_shape, out) = kernels::blur_pool_forward(shape, self.nodes[xi].value.data());
        let rg = self.rg(xi);
        Ok(self.push(Tensor::from_vec(out_shape, out)?, Op::BlurPool { x: xi }, rg))
    }

    /// 2x bilinear upsampling with half-pixel centres and edge clamping.
    pub fn upsample2x(&mut self, x: Var) -> Result<Var> {
        let xi = self.check(x)?;
        let shape = self.nodes[xi].value.shape();
        let (out_shape, out) = kernels::upsample2x_forward(shape, self.nodes[xi].value.data());
        let rg = self.rg(xi);
        Ok(self.push(Tensor::from_vec(out_shape, out)?, Op::Upsample2x { x: xi }, rg))
    }

    pub(crate) fn charbonnier(&mut self, pred: Var, target: Var, eps: f64, reduction: LossReduction) -> Result<Var> {
        let (pi, ti) = (self.check(pred)?, self.check(target)?);
        let (ps, ts) = (self.nodes[pi].value.shape(), self.nodes[ti].value.shape());
        if ps != ts {
            return shape_err(format!("charbonnier shape mismatch: {ps} vs {ts}"));
        }
        let eps_t = T::from_f64_lossy(eps);
        let eps2 = eps_t * eps_t;
        let diffs = self.nodes[pi].value.data().iter().zip(self.nodes[ti].value.data()).map(|(&p, &t)| p - t);
        let value = match reduction {
            LossReduction::PerPixelMean => {
                // sqrt(d^2 + e^2) - e rewritten so zero differences contribute exactly 0.
                let excess = diffs.fold(T::zero(), |acc, d| acc + d * d / ((d * d + eps2).sqrt() + eps_t));
                eps_t + excess / T::from_usize(ps.numel()).unwrap()
            }
            LossReduction::GlobalNorm => (diffs.fold(T::zero(), |acc, d| acc + d * d) + eps2).sqrt(),
        };
        let rg = self.rg(pi) || self.rg(ti);
        Ok(self.push(Tensor::scalar(value), Op::Charbonnier { pred: pi, target: ti, eps, reduction }, rg))
    }

    /// Sum of all elements as a scalar.
    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let xi = self.check(x)?;
        let total = self.nodes[xi].value.data().iter().fold(T::zero(), |a, &v| a + v);
        let rg = self.rg(xi);
        Ok(self.push(Tensor::scalar(total), Op::Sum { x: xi }, rg))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Result<Var> {
        let xi = self.check(x)?;
        let f = T::from_f64_lossy(factor);
        let value = self.nodes[xi].value.map(|v| v * f);
        let rg = self.rg(xi);
        Ok(self.push(value, Op::Scale { x: xi, factor }, rg))
    }

    /// Identity in the forward pass whose backward rule multiplies the
    /// incoming gradient by `factor`. Used to build broken-gradient fixtures.
    pub fn grad_scale(&mut self, x: Var, factor: f64) -> Result<Var> {
        let xi = self.check(x)?;
        let value = self.nodes[xi].value.clone();
        let rg = self.rg(xi);
        Ok(self.push(value, Op::GradScale { x: xi, factor }, rg))
    }

    /// Propagates gradients from the scalar `loss` back through the tape.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let li = self.check(loss)?;
        if self.nodes[li].value.len() != 1 {
            return contract_err(format!(
                "loss must be a scalar, got shape {}",
                self.nodes[li].value.shape()
            ));
        }
        let shapes: Vec<Shape> = self.nodes.iter().map(|n| n.value.shape()).collect();
        let mut grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];
        if self.nodes[li].requires_grad {
            grads[li] = Some(vec![T::one()]);
        }
        for i in (0..=li).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(gy) = grads[i].take() else { continue };
            self.backward_node(i, &gy, &mut grads, &shapes);
            grads[i] = Some(gy);
        }
        Ok(Gradients { tape: self.id, shapes, grads })
    }

    fn backward_node(&self, i: usize, gy: &[T], grads: &mut [Option<Vec<T>>], shapes: &[Shape]) {
        let nodes = &self.nodes;
        let val = |j: usize| nodes[j].value.data();
        match &nodes[i].op {
            Op::Leaf => {}
            Op::Conv2d { x, w, b, geom } => {
                let need = (self.rg(*x), self.rg(*w), b.is_some_and(|b| self.rg(b)));
                let g = kernels::conv2d_backward(geom, val(*x), val(*w), gy, need);
                if let Some(dx) = g.dx {
                    add_into(accumulate(grads, shapes, *x), &dx);
                }
                if let Some(dw) = g.dw {
                    add_into(accumulate(grads, shapes, *w), &dw);
                }
                if let (Some(db), Some(b)) = (g.db, b) {
                    add_into(accumulate(grads, shapes, *b), &db);
                }
            }
            Op::Prelu { x, slope } => {
                let shape = shapes[*x];
                let plane = shape.plane();
                let xs = val(*x);
                let slopes = val(*slope);
                let ch = |k: usize| if slopes.len() == 1 { 0 } else { (k / plane) % shape.channels };
                if self.rg(*x) {
                    let dx = accumulate(grads, shapes, *x);
                    for (k, (d, &v)) in dx.iter_mut().zip(xs).enumerate() {
                        let a = if v >= T::zero() { T::one() } else { slopes[ch(k)] };
                        *d = *d + a * gy[k];
                    }
                }
                if self.rg(*slope) {
                    let ds = accumulate(grads, shapes, *slope);
                    for (k, &v) in xs.iter().enumerate() {
                        if v < T::zero() {
                            let c = ch(k);
                            ds[c] = ds[c] + v * gy[k];
                        }
                    }
                }
            }
            Op::Sigmoid { x } => {
                let ys = nodes[i].value.data();
                let dx = accumulate(grads, shapes, *x);
                for ((d, &y), &g) in dx.iter_mut().zip(ys).zip(gy) {
                    *d = *d + g * y * (T::one() - y);
                }
            }
            Op::GlobalAvgPool { x } => {
                let plane = shapes[*x].plane();
                let inv = T::from_usize(plane).unwrap().recip();
                let dx = accumulate(grads, shapes, *x);
                for (p, chunk) in dx.chunks_mut(plane).enumerate() {
                    let g = gy[p] * inv;
                    for d in chunk {
                        *d = *d + g;
                    }
                }
            }
            Op::ChannelPool { x, argmax } => {
                let d = kernels::channel_pool_backward(shapes[*x], argmax, gy);
                add_into(accumulate(grads, shapes, *x), &d);
            }
            Op::BranchSoftmax { inputs, first, which } => {
                let s_i = nodes[i].value.data();
                for (j, &input) in inputs.iter().enumerate() {
                    if !self.rg(input) {
                        continue;
                    }
                    let s_j = nodes[first + j].value.data();
                    let dv = accumulate(grads, shapes, input);
                    for p in 0..dv.len() {
                        let delta = if j == *which { T::one() } else { T::zero() };
                        dv[p] = dv[p] + gy[p] * s_i[p] * (delta - s_j[p]);
                    }
                }
            }
            Op::Add { a, b } => {
                for &k in [a, b] {
                    if self.rg(k) {
                        add_into(accumulate(grads, shapes, k), gy);
                    }
                }
            }
            Op::Sub { a, b } => {
                if self.rg(*a) {
                    add_into(accumulate(grads, shapes, *a), gy);
                }
                if self.rg(*b) {
                    let db = accumulate(grads, shapes, *b);
                    for (d, &g) in db.iter_mut().zip(gy) {
                        *d = *d - g;
                    }
                }
            }
            Op::Mul { a, b, strides } => {
                let full = shapes[*a];
                let (xa, xb) = (val(*a), val(*b));
                if self.rg(*a) {
                    let da = accumulate(grads, shapes, *a);
                    kernels::for_each_broadcast(full, *strides, |p, q| da[p] = da[p] + gy[p] * xb[q]);
                }
                if self.rg(*b) {
                    let db = accumulate(grads, shapes, *b);
                    kernels::for_each_broadcast(full, *strides, |p, q| db[q] = db[q] + gy[p] * xa[p]);
                }
            }
            Op::Concat { inputs } => {
                let out_shape = shapes[i];
                let per_out = out_shape.channels * out_shape.plane();
                let mut offset = 0;
                for &input in inputs {
                    let s = shapes[input];
                    let per = s.channels * s.plane();
                    if self.rg(input) {
                        let d = accumulate(grads, shapes, input);
                        for n in 0..s.batch {
                            let src = &gy[n * per_out + offset..n * per_out + offset + per];
                            add_into(&mut d[n * per..(n + 1) * per], src);
                        }
                    }
                    offset += per;
                }
            }
            Op::BlurPool { x } => {
                let d = kernels::blur_pool_backward(shapes[*x], gy);
                add_into(accumulate(grads, shapes, *x), &d);
            }
            Op::Upsample2x { x } => {
                let d = kernels::upsample2x_backward(shapes[*x], gy);
                add_into(accumulate(grads, shapes, *x), &d);
            }
            Op::Charbonnier { pred, target, eps, reduction } => {
                let eps_t = T::from_f64_lossy(*eps);
                let eps2 = eps_t * eps_t;
                let (ps, ts) = (val(*pred), val(*target));
                let n = ps.len();
                let dpred: Vec<T> = match reduction {
                    LossReduction::PerPixelMean => {
                        let scale = gy[0] / T::from_usize(n).unwrap();
                        ps.iter()
                            .zip(ts)
                            .map(|(&p, &t)| {
                                let d = p - t;
                                scale * d / (d * d + eps2).sqrt()
                            })
                            .collect()
                    }
                    LossReduction::GlobalNorm => {
                        let scale = gy[0] / nodes[i].value.data()[0];
                        ps.iter().zip(ts).map(|(&p, &t)| scale * (p - t)).collect()
                    }
                };
                if self.rg(*pred) {
                    add_into(accumulate(grads, shapes, *pred), &dpred);
                }
                if self.rg(*target) {
                    let dt = accumulate(grads, shapes, *target);
                    for (d, &g) in dt.iter_mut().zip(&dpred) {
                        *d = *d - g;
                    }
                }
            }
            Op::Sum { x } => {
                let dx = accumulate(grads, shapes, *x);
                for d in dx.iter_mut() {
                    *d = *d + gy[0];
                }
            }
            Op::Scale { x, factor } | Op::GradScale { x, factor } => {
                let f = T::from_f64_lossy(*factor);
                let dx = accumulate(grads, shapes, *x);
                for (d, &g) in dx.iter_mut().zip(gy) {
                    *d = *d + g * f;
                }
            }
        }
    }
}
