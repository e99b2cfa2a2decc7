use rand::Rng;
use rayon::prelude::*;

use super::{Module, Parameter};
use crate::error::{Error, Result};
use crate::tensor::{gemm, MatRef, Scalar, Tensor};

/// Geometry of a zero-padded "same" convolution.
#[derive(Debug, Clone, Copy)]
struct Geometry {
    in_c: usize,
    out_c: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    h: usize,
    w: usize,
    out_h: usize,
    out_w: usize,
}

impl Geometry {
    fn new<T: Scalar>(input: &Tensor<T>, weight: &Tensor<T>, stride: usize) -> Result<(usize, Self)> {
        let (b, c, h, w) = input.dims4()?;
        let (o, i, kh, kw) = weight.dims4()?;
        if c != i {
            return Err(Error::Shape(format!(
                "conv input has {c} channels, weight expects {i}"
            )));
        }
        check_kernel(kh, kw)?;
        check_stride(stride)?;
        Ok((
            b,
            Geometry {
                in_c: c,
                out_c: o,
                kh,
                kw,
                stride,
                h,
                w,
                out_h: h.div_ceil(stride),
                out_w: w.div_ceil(stride),
            },
        ))
    }

    fn patch(&self) -> usize {
        self.in_c * self.kh * self.kw
    }

    fn positions(&self) -> usize {
        self.out_h * self.out_w
    }

    fn im2col<T: Scalar>(&self, x: &[T], cols: &mut [T]) {
        let (ph, pw) = ((self.kh - 1) / 2, (self.kw - 1) / 2);
        let p = self.positions();
        for ci in 0..self.in_c {
            let plane = &x[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = (ci * self.kh + ky) * self.kw + kx;
                    let dst = &mut cols[row * p..(row + 1) * p];
                    for oy in 0..self.out_h {
                        let iy = (oy * self.stride + ky) as isize - ph as isize;
                        let line = &mut dst[oy * self.out_w..(oy + 1) * self.out_w];
                        if iy < 0 || iy >= self.h as isize {
                            line.iter_mut().for_each(|v| *v = T::zero());
                            continue;
                        }
                        let src = &plane[iy as usize * self.w..(iy as usize + 1) * self.w];
                        for (ox, v) in line.iter_mut().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - pw as isize;
                            *v = if ix < 0 || ix >= self.w as isize {
                                T::zero()
                            } else {
                                src[ix as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    fn col2im<T: Scalar>(&self, cols: &[T], gx: &mut [T]) {
        let (ph, pw) = ((self.kh - 1) / 2, (self.kw - 1) / 2);
        let p = self.positions();
        for ci in 0..self.in_c {
            let plane = &mut gx[ci * self.h * self.w..(ci + 1) * self.h * self.w];
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = (ci * self.kh + ky) * self.kw + kx;
                    let src = &cols[row * p..(row + 1) * p];
                    for oy in 0..self.out_h {
                        let iy = (oy * self.stride + ky) as isize - ph as isize;
                        if iy < 0 || iy >= self.h as isize {
                            continue;
                        }
                        let line = &src[oy * self.out_w..(oy + 1) * self.out_w];
                        let dst = &mut plane[iy as usize * self.w..(iy as usize + 1) * self.w];
                        for (ox, &g) in line.iter().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - pw as isize;
                            if ix >= 0 && ix < self.w as isize {
                                dst[ix as usize] += g;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn check_kernel(kh: usize, kw: usize) -> Result<()> {
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "same-padded convolution needs odd kernel extents, got {kh}x{kw}"
        )));
    }
    Ok(())
}

fn check_stride(stride: usize) -> Result<()> {
    if !(stride == 1 || stride == 2) {
        return Err(Error::InvalidArgument(format!(
            "convolution stride must be 1 or 2, got {stride}"
        )));
    }
    Ok(())
}

/// Zero-padded convolution. Stride 1 keeps the spatial size; stride 2
/// produces `ceil(H/2) x ceil(W/2)`.
pub fn conv2d_same<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
) -> Result<Tensor<T>> {
    let (batch, g) = Geometry::new(input, weight, stride)?;
    if bias.len() != g.out_c {
        return Err(Error::Shape(format!(
            "bias has {} entries, expected {}",
            bias.len(),
            g.out_c
        )));
    }
    let in_len = g.in_c * g.h * g.w;
    let p = g.positions();
    let mut out = vec![T::zero(); batch * g.out_c * p];
    out.par_chunks_mut(g.out_c * p)
        .zip(input.data().par_chunks(in_len))
        .for_each(|(y, x)| {
            let mut cols = vec![T::zero(); g.patch() * p];
            g.im2col(x, &mut cols);
            for (o, row) in y.chunks_mut(p).enumerate() {
                row.iter_mut().for_each(|v| *v = bias.data()[o]);
            }
            gemm(
                g.out_c,
                g.patch(),
                p,
                MatRef::rows(weight.data(), g.patch()),
                MatRef::rows(&cols, p),
                T::one(),
                y,
            );
        });
    Tensor::new(vec![batch, g.out_c, g.out_h, g.out_w], out)
}

/// Gradients of [`conv2d_same`] with respect to its three inputs.
#[derive(Debug, Clone)]
pub struct ConvGrads<T: Scalar> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn conv2d_same_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
) -> Result<ConvGrads<T>> {
    let (batch, g) = Geometry::new(input, weight, stride)?;
    let expected = [batch, g.out_c, g.out_h, g.out_w];
    if grad_out.shape() != expected {
        return Err(Error::Shape(format!(
            "conv grad_out has shape {:?}, expected {expected:?}",
            grad_out.shape()
        )));
    }
    let in_len = g.in_c * g.h * g.w;
    let p = g.positions();
    let patch = g.patch();

    // Per-item results are reduced in batch order below, so the weight
    // gradient does not depend on how rayon schedules the items.
    let per_item: Vec<(Vec<T>, Vec<T>)> = input
        .data()
        .par_chunks(in_len)
        .zip(grad_out.data().par_chunks(g.out_c * p))
        .map(|(x, gy)| {
            let mut cols = vec![T::zero(); patch * p];
            g.im2col(x, &mut cols);
            let mut gw = vec![T::zero(); g.out_c * patch];
            gemm(
                g.out_c,
                p,
                patch,
                MatRef::rows(gy, p),
                MatRef::transposed(&cols, p),
                T::zero(),
                &mut gw,
            );
            gemm(
                patch,
                g.out_c,
                p,
                MatRef::transposed(weight.data(), patch),
                MatRef::rows(gy, p),
                T::zero(),
                &mut cols,
            );
            let mut gx = vec![T::zero(); in_len];
            g.col2im(&cols, &mut gx);
            (gw, gx)
        })
        .collect();

    let mut gw = vec![T::zero(); g.out_c * patch];
    let mut gx = Vec::with_capacity(batch * in_len);
    for (w_item, x_item) in per_item {
        for (acc, v) in gw.iter_mut().zip(w_item) {
            *acc += v;
        }
        gx.extend(x_item);
    }
    let mut gb = vec![T::zero(); g.out_c];
    for item in grad_out.data().chunks(g.out_c * p) {
        for (o, row) in item.chunks(p).enumerate() {
            gb[o] += row.iter().copied().sum::<T>();
        }
    }
    Ok(ConvGrads {
        input: Tensor::new(input.shape().to_vec(), gx)?,
        weight: Tensor::new(weight.shape().to_vec(), gw)?,
        bias: Tensor::new(vec![g.out_c], gb)?,
    })
}

/// Convolution layer with "same" zero padding.
#[derive(Debug, Clone)]
pub struct Conv2d<T: Scalar = f32> {
    pub weight: Parameter<T>,
    pub bias: Parameter<T>,
    stride: usize,
}

impl<T: Scalar> Conv2d<T> {
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        rng: &mut R,
    ) -> Result<Self> {
        check_kernel(kernel, kernel)?;
        check_stride(stride)?;
        Ok(Conv2d {
            weight: Parameter::normal(
                format!("{name}.weight"),
                &[out_channels, in_channels, kernel, kernel],
                rng,
            )?,
            bias: Parameter::zeros(format!("{name}.bias"), &[out_channels])?,
            stride,
        })
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn in_channels(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        conv2d_same(input, &self.weight.value, &self.bias.value, self.stride)
    }

    pub fn backward(&mut self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let grads = conv2d_same_backward(input, &self.weight.value, grad_out, self.stride)?;
        self.weight.grad.add_assign(&grads.weight)?;
        self.bias.grad.add_assign(&grads.bias)?;
        Ok(grads.input)
    }
}

impl<T: Scalar> Module<T> for Conv2d<T> {
    fn visit(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        f(&self.weight);
        f(&self.bias);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}
