//! Forward and backward kernels on raw NCHW buffers. The tape owns
//! bookkeeping; everything here is plain slice arithmetic.

use super::{Scalar, Shape};
use crate::error::{shape_err, Result};

/// Output geometry of a zero-padded cross-correlation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ConvGeom {
    pub batch: usize,
    pub in_c: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_c: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeom {
    pub fn new(input: Shape, weight: Shape, stride: usize, pad: usize) -> Result<Self> {
        let (kh, kw) = (weight.height, weight.width);
        if weight.channels != input.channels {
            return shape_err(format!(
                "conv2d expects {} input channels, got input {input}",
                weight.channels
            ));
        }
        if kh % 2 == 0 || kw % 2 == 0 {
            return shape_err(format!("conv2d kernel extents must be odd, got {kh}x{kw}"));
        }
        if stride == 0 {
            return shape_err("conv2d stride must be >= 1");
        }
        let span_h = input.height + 2 * pad;
        let span_w = input.width + 2 * pad;
        if span_h < kh || span_w < kw {
            return shape_err(format!(
                "conv2d output extent would be non-positive for input {input}, kernel {kh}x{kw}, padding {pad}"
            ));
        }
        Ok(ConvGeom {
            batch: input.batch,
            in_c: input.channels,
            in_h: input.height,
            in_w: input.width,
            out_c: weight.batch,
            kh,
            kw,
            stride,
            pad,
            out_h: (span_h - kh) / stride + 1,
            out_w: (span_w - kw) / stride + 1,
        })
    }

    pub fn output_shape(&self) -> Shape {
        Shape { batch: self.batch, channels: self.out_c, height: self.out_h, width: self.out_w }
    }

    fn pointwise(&self) -> bool {
        self.kh == 1 && self.kw == 1 && self.stride == 1 && self.pad == 0
    }

    fn col_rows(&self) -> usize {
        self.in_c * self.kh * self.kw
    }

    fn out_plane(&self) -> usize {
        self.out_h * self.out_w
    }

    fn im2col<T: Scalar>(&self, x: &[T], cols: &mut [T]) {
        let plane = self.out_plane();
        for c in 0..self.in_c {
            let src = &x[c * self.in_h * self.in_w..(c + 1) * self.in_h * self.in_w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = (c * self.kh + ky) * self.kw + kx;
                    let dst = &mut cols[row * plane..(row + 1) * plane];
                    for oy in 0..self.out_h {
                        let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                        let line = &mut dst[oy * self.out_w..(oy + 1) * self.out_w];
                        if iy < 0 || iy >= self.in_h as isize {
                            line.fill(T::zero());
                            continue;
                        }
                        let src_row = &src[iy as usize * self.in_w..(iy as usize + 1) * self.in_w];
                        for (ox, v) in line.iter_mut().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                            *v = if ix < 0 || ix >= self.in_w as isize {
                                T::zero()
                            } else {
                                src_row[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im<T: Scalar>(&self, cols: &[T], dx: &mut [T]) {
        let plane = self.out_plane();
        for c in 0..self.in_c {
            let dst = &mut dx[c * self.in_h * self.in_w..(c + 1) * self.in_h * self.in_w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = (c * self.kh + ky) * self.kw + kx;
                    let src = &cols[row * plane..(row + 1) * plane];
                    for oy in 0..self.out_h {
                        let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                        if iy < 0 || iy >= self.in_h as isize {
                            continue;
                        }
                        let dst_row = &mut dst[iy as usize * self.in_w..(iy as usize + 1) * self.in_w];
                        for ox in 0..self.out_w {
                            let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                            if ix >= 0 && ix < self.in_w as isize {
                                dst_row[ix as usize] = dst_row[ix as usize] + src[oy * self.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn conv2d_forward<T: Scalar>(g: &ConvGeom, x: &[T], w: &[T], bias: Option<&[T]>) -> Vec<T> {
    let plane = g.out_plane();
    let k = g.col_rows();
    let in_stride = g.in_c * g.in_h * g.in_w;
    let mut out = vec![T::zero(); g.batch * g.out_c * plane];
    let mut cols = if g.pointwise() { Vec::new() } else { vec![T::zero(); k * plane] };
    for n in 0..g.batch {
        let xn = &x[n * in_stride..(n + 1) * in_stride];
        let on = &mut out[n * g.out_c * plane..(n + 1) * g.out_c * plane];
        if let Some(b) = bias {
            for (o, chunk) in on.chunks_mut(plane).enumerate() {
                chunk.fill(b[o]);
            }
        }
        let beta = if bias.is_some() { T::one() } else { T::zero() };
        let colsn: &[T] = if g.pointwise() {
            xn
        } else {
            g.im2col(xn, &mut cols);
            &cols
        };
        T::gemm(
            g.out_c,
            k,
            plane,
            T::one(),
            w,
            k as isize,
            1,
            colsn,
            plane as isize,
            1,
            beta,
            on,
            plane as isize,
            1,
        );
    }
    out
}

pub(crate) struct ConvGrads<T> {
    pub dx: Option<Vec<T>>,
    pub dw: Option<Vec<T>>,
    pub db: Option<Vec<T>>,
}

pub(crate) fn conv2d_backward<T: Scalar>(
    g: &ConvGeom,
    x: &[T],
    w: &[T],
    gy: &[T],
    need: (bool, bool, bool),
) -> ConvGrads<T> {
    let plane = g.out_plane();
    let k = g.col_rows();
    let in_stride = g.in_c * g.in_h * g.in_w;
    let mut dx = need.0.then(|| vec![T::zero(); x.len()]);
    let mut dw = need.1.then(|| vec![T::zero(); w.len()]);
    let db = need.2.then(|| {
        let mut db = vec![T::zero(); g.out_c];
        for n in 0..g.batch {
            for (o, acc) in db.iter_mut().enumerate() {
                let start = (n * g.out_c + o) * plane;
                *acc = gy[start..start + plane].iter().fold(*acc, |a, &v| a + v);
            }
        }
        db
    });
    let mut cols = if g.pointwise() { Vec::new() } else { vec![T::zero(); k * plane] };
    let mut dcols = if g.pointwise() || dx.is_none() { Vec::new() } else { vec![T::zero(); k * plane] };
    for n in 0..g.batch {
        let gyn = &gy[n * g.out_c * plane..(n + 1) * g.out_c * plane];
        if let Some(dw) = dw.as_mut() {
            let xn = &x[n * in_stride..(n + 1) * in_stride];
            let colsn: &[T] = if g.pointwise() {
                xn
            } else {
                g.im2col(xn, &mut cols);
                &cols
            };
            // dW (out_c x k) += gY (out_c x plane) * cols^T (plane x k)
            T::gemm(
                g.out_c,
                plane,
                k,
                T::one(),
                gyn,
                plane as isize,
                1,
                colsn,
                1,
                plane as isize,
                T::one(),
                dw,
                k as isize,
                1,
            );
        }
        if let Some(dx) = dx.as_mut() {
            let dxn = &mut dx[n * in_stride..(n + 1) * in_stride];
            // dcols (k x plane) = W^T (k x out_c) * gY (out_c x plane)
            if g.pointwise() {
                T::gemm(
                    k,
                    g.out_c,
                    plane,
                    T::one(),
                    w,
                    1,
                    k as isize,
                    gyn,
                    plane as isize,
                    1,
                    T::one(),
                    dxn,
                    plane as isize,
                    1,
                );
            } else {
                T::gemm(
                    k,
                    g.out_c,
                    plane,
                    T::one(),
                    w,
                    1,
                    k as isize,
                    gyn,
                    plane as isize,
                    1,
                    T::zero(),
                    &mut dcols,
                    plane as isize,
                    1,
                );
                g.col2im(&dcols, dxn);
            }
        }
    }
    ConvGrads { dx, dw, db }
}

/// Separable binomial low-pass `[1, 2, 1] / 4` in each direction.
const BLUR_TAPS: [f64; 3] = [0.25, 0.5, 0.25];

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    r.clamp(0, n - 1) as usize
}

/// Row offsets and weights of the blur-pool taps centred on input `2 * o`.
fn blur_taps(o: usize, extent: usize) -> [(usize, f64); 3] {
    let c = 2 * o as isize;
    [
        (reflect(c - 1, extent), BLUR_TAPS[0]),
        (reflect(c, extent), BLUR_TAPS[1]),
        (reflect(c + 1, extent), BLUR_TAPS[2]),
    ]
}

/// 3x3 binomial blur with reflect padding followed by stride-2 subsampling.
pub(crate) fn blur_pool_forward<T: Scalar>(shape: Shape, x: &[T]) -> (Shape, Vec<T>) {
    let (oh, ow) = (shape.height / 2, shape.width / 2);
    let out_shape = Shape { height: oh, width: ow, ..shape };
    let mut out = vec![T::zero(); out_shape.numel()];
    let xtaps: Vec<_> = (0..ow).map(|o| blur_taps(o, shape.width)).collect();
    for p in 0..shape.batch * shape.channels {
        let src = &x[p * shape.plane()..(p + 1) * shape.plane()];
        let dst = &mut out[p * oh * ow..(p + 1) * oh * ow];
        for oy in 0..oh {
            let ytaps = blur_taps(oy, shape.height);
            for (ox, xt) in xtaps.iter().enumerate() {
                let mut acc = T::zero();
                for &(iy, wy) in &ytaps {
                    for &(ix, wx) in xt {
                        acc = acc + T::from_f64_lossy(wy * wx) * src[iy * shape.width + ix];
                    }
                }
                dst[oy * ow + ox] = acc;
            }
        }
    }
    (out_shape, out)
}

pub(crate) fn blur_pool_backward<T: Scalar>(shape: Shape, gy: &[T]) -> Vec<T> {
    let (oh, ow) = (shape.height / 2, shape.width / 2);
    let mut dx = vec![T::zero(); shape.numel()];
    let xtaps: Vec<_> = (0..ow).map(|o| blur_taps(o, shape.width)).collect();
    for p in 0..shape.batch * shape.channels {
        let src = &gy[p * oh * ow..(p + 1) * oh * ow];
        let dst = &mut dx[p * shape.plane()..(p + 1) * shape.plane()];
        for oy in 0..oh {
            let ytaps = blur_taps(oy, shape.height);
            for (ox, xt) in xtaps.iter().enumerate() {
                let g = src[oy * ow + ox];
                for &(iy, wy) in &ytaps {
                    for &(ix, wx) in xt {
                        let i = iy * shape.width + ix;
                        dst[i] = dst[i] + T::from_f64_lossy(wy * wx) * g;
                    }
                }
            }
        }
    }
    dx
}

/// Source rows and weights for 2x bilinear upsampling with half-pixel centres.
fn upsample_taps(o: usize, extent: usize) -> [(usize, f64); 2] {
    let i = o / 2;
    if o % 2 == 0 {
        [(i.saturating_sub(1), 0.25), (i, 0.75)]
    } else {
        [(i, 0.75), ((i + 1).min(extent - 1), 0.25)]
    }
}

pub(crate) fn upsample2x_forward<T: Scalar>(shape: Shape, x: &[T]) -> (Shape, Vec<T>) {
    let (oh, ow) = (shape.height * 2, shape.width * 2);
    let out_shape = Shape { height: oh, width: ow, ..shape };
    let mut out = vec![T::zero(); out_shape.numel()];
    let xtaps: Vec<_> = (0..ow).map(|o| upsample_taps(o, shape.width)).collect();
    for p in 0..shape.batch * shape.channels {
        let src = &x[p * shape.plane()..(p + 1) * shape.plane()];
        let dst = &mut out[p * oh * ow..(p + 1) * oh * ow];
        for oy in 0..oh {
            let ytaps = upsample_taps(oy, shape.height);
            for (ox, xt) in xtaps.iter().enumerate() {
                let mut acc = T::zero();
                for &(iy, wy) in &ytaps {
                    for &(ix, wx) in xt {
                        acc = acc + T::from_f64_lossy(wy * wx) * src[iy * shape.width + ix];
                    }
                }
                dst[oy * ow + ox] = acc;
            }
        }
    }
    (out_shape, out)
}

pub(crate) fn upsample2x_backward<T: Scalar>(shape: Shape, gy: &[T]) -> Vec<T> {
    let (oh, ow) = (shape.height * 2, shape.width * 2);
    let mut dx = vec![T::zero(); shape.numel()];
    let xtaps: Vec<_> = (0..ow).map(|o| upsample_taps(o, shape.width)).collect();
    for p in 0..shape.batch * shape.channels {
        let src = &gy[p * oh * ow..(p + 1) * oh * ow];
        let dst = &mut dx[p * shape.plane()..(p + 1) * shape.plane()];
        for oy in 0..oh {
            let ytaps = upsample_taps(oy, shape.height);
            for (ox, xt) in xtaps.iter().enumerate() {
                let g = src[oy * ow + ox];
                for &(iy, wy) in &ytaps {
                    for &(ix, wx) in xt {
                        let i = iy * shape.width + ix;
                        dst[i] = dst[i] + T::from_f64_lossy(wy * wx) * g;
                    }
                }
            }
        }
    }
    dx
}

/// Per-position channel mean (plane 0) and max (plane 1), plus the argmax
/// channel used to route the max-plane gradient.
pub(crate) fn channel_pool_forward<T: Scalar>(shape: Shape, x: &[T]) -> (Vec<T>, Vec<u32>) {
    let plane = shape.plane();
    let inv_c = T::from_usize(shape.channels).unwrap().recip();
    let mut out = vec![T::zero(); shape.batch * 2 * plane];
    let mut argmax = vec![0u32; shape.batch * plane];
    for n in 0..shape.batch {
        let base = n * shape.channels * plane;
        for p in 0..plane {
            let mut sum = T::zero();
            let mut best = x[base + p];
            let mut best_c = 0;
            for c in 0..shape.channels {
                let v = x[base + c * plane + p];
                sum = sum + v;
                if v > best {
                    best = v;
                    best_c = c;
                }
            }
            out[n * 2 * plane + p] = sum * inv_c;
            out[n * 2 * plane + plane + p] = best;
            argmax[n * plane + p] = best_c as u32;
        }
    }
    (out, argmax)
}

pub(crate) fn channel_pool_backward<T: Scalar>(shape: Shape, argmax: &[u32], gy: &[T]) -> Vec<T> {
    let plane = shape.plane();
    let inv_c = T::from_usize(shape.channels).unwrap().recip();
    let mut dx = vec![T::zero(); shape.numel()];
    for n in 0..shape.batch {
        let base = n * shape.channels * plane;
        for p in 0..plane {
            let g_mean = gy[n * 2 * plane + p] * inv_c;
            for c in 0..shape.channels {
                dx[base + c * plane + p] = g_mean;
            }
            let c = argmax[n * plane + p] as usize;
            let i = base + c * plane + p;
            dx[i] = dx[i] + gy[n * 2 * plane + plane + p];
        }
    }
    dx
}

/// Stride table mapping an index of `full` onto a broadcast operand.
pub(crate) fn broadcast_strides(full: Shape, operand: Shape) -> Result<[usize; 4]> {
    let f = full.dims();
    let o = operand.dims();
    let mut strides = [0usize; 4];
    let mut acc = 1;
    for axis in (0..4).rev() {
        if o[axis] == f[axis] {
            strides[axis] = acc;
        } else if o[axis] == 1 {
            strides[axis] = 0;
        } else {
            return shape_err(format!("cannot broadcast {operand} against {full}"));
        }
        acc *= o[axis];
    }
    Ok(strides)
}

/// Calls `f(full_index, operand_index)` for every element of `full`.
pub(crate) fn for_each_broadcast(full: Shape, strides: [usize; 4], mut f: impl FnMut(usize, usize)) {
    let mut i = 0;
    for n in 0..full.batch {
        for c in 0..full.channels {
            let base = n * strides[0] + c * strides[1];
            for y in 0..full.height {
                let row = base + y * strides[2];
                for x in 0..full.width {
                    f(i, row + x * strides[3]);
                    i += 1;
                }
            }
        }
    }
}
