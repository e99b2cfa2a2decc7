//! Resize layer whose output size is a runtime argument.
//!
//! Both modes use half-pixel centers: destination index `d` samples source
//! coordinate `(d + 0.5) * in / out - 0.5`. At scale 1 every destination
//! lands on an integer source coordinate, so identity-sized resizes are
//! exact. Bilinear coordinates are clamped to `[0, in - 1]`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResizeMode {
    Bilinear,
    Nearest,
}

/// Source and destination spatial sizes of one resize call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResizeSpec {
    pub src_h: usize,
    pub src_w: usize,
    pub dst_h: usize,
    pub dst_w: usize,
    pub mode: ResizeMode,
}

impl ResizeSpec {
    pub fn new(src: (usize, usize), dst: (usize, usize), mode: ResizeMode) -> Result<Self> {
        if src.0 == 0 || src.1 == 0 || dst.0 == 0 || dst.1 == 0 {
            return Err(Error::InvalidArgument(format!(
                "resize dimensions must be positive, got {}x{} -> {}x{}",
                src.0, src.1, dst.0, dst.1
            )));
        }
        Ok(ResizeSpec {
            src_h: src.0,
            src_w: src.1,
            dst_h: dst.0,
            dst_w: dst.1,
            mode,
        })
    }

    /// Ratio of source to destination extent along x (`W1 / W2`).
    pub fn x_ratio(&self) -> f64 {
        self.src_w as f64 / self.dst_w as f64
    }

    /// Ratio of source to destination extent along y (`H1 / H2`).
    pub fn y_ratio(&self) -> f64 {
        self.src_h as f64 / self.dst_h as f64
    }

    fn for_input<T: Scalar>(input: &Tensor<T>, dst: (usize, usize), mode: ResizeMode) -> Result<Self> {
        let (_, _, h, w) = input.dims4()?;
        Self::new((h, w), dst, mode)
    }
}

/// Two-tap linear interpolation along one axis.
#[derive(Debug, Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    frac: f64,
}

fn linear_taps(src: usize, dst: usize) -> Vec<Tap> {
    let scale = src as f64 / dst as f64;
    let max = (src - 1) as f64;
    (0..dst)
        .map(|d| {
            let x = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, max);
            let lo = x.floor() as usize;
            Tap {
                lo,
                hi: (lo + 1).min(src - 1),
                frac: x - lo as f64,
            }
        })
        .collect()
}

/// `min(floor((d + 0.5) * src / dst), src - 1)`, evaluated in integers.
pub(crate) fn nearest_index(d: usize, src: usize, dst: usize) -> usize {
    ((2 * d + 1) * src / (2 * dst)).min(src - 1)
}

fn nearest_indices(src: usize, dst: usize) -> Vec<usize> {
    (0..dst).map(|d| nearest_index(d, src, dst)).collect()
}

pub fn resize<T: Scalar>(input: &Tensor<T>, out_h: usize, out_w: usize, mode: ResizeMode) -> Result<Tensor<T>> {
    match mode {
        ResizeMode::Bilinear => resize_bilinear(input, out_h, out_w),
        ResizeMode::Nearest => resize_nearest(input, out_h, out_w),
    }
}

pub fn resize_backward<T: Scalar>(grad_out: &Tensor<T>, spec: &ResizeSpec) -> Result<Tensor<T>> {
    match spec.mode {
        ResizeMode::Bilinear => resize_bilinear_backward(grad_out, spec),
        ResizeMode::Nearest => resize_nearest_backward(grad_out, spec),
    }
}

/// Bilinear resize of a BCHW tensor to `out_h x out_w`.
///
/// Within a source cell the surface is `a0 + a1*x + a2*y + a3*x*y` with
/// `a0 = f00`, `a1 = f10 - f00`, `a2 = f01 - f00`, `a3 = f11 - f10 - f01 + f00`.
pub fn resize_bilinear<T: Scalar>(input: &Tensor<T>, out_h: usize, out_w: usize) -> Result<Tensor<T>> {
    ResizeSpec::for_input(input, (out_h, out_w), ResizeMode::Bilinear)?;
    let (b, c, h, w) = input.dims4()?;
    let ys = linear_taps(h, out_h);
    let xs = linear_taps(w, out_w);
    let mut out = vec![T::zero(); b * c * out_h * out_w];
    out.par_chunks_mut(out_h * out_w)
        .zip(input.data().par_chunks(h * w))
        .for_each(|(dst, src)| {
            for (oy, ty) in ys.iter().enumerate() {
                let fy = T::lit(ty.frac);
                let row0 = &src[ty.lo * w..(ty.lo + 1) * w];
                let row1 = &src[ty.hi * w..(ty.hi + 1) * w];
                for (ox, tx) in xs.iter().enumerate() {
                    let fx = T::lit(tx.frac);
                    let (f00, f10) = (row0[tx.lo], row0[tx.hi]);
                    let (f01, f11) = (row1[tx.lo], row1[tx.hi]);
                    let a1 = f10 - f00;
                    let a2 = f01 - f00;
                    let a3 = f11 - f10 - f01 + f00;
                    dst[oy * out_w + ox] = f00 + a1 * fx + a2 * fy + a3 * fx * fy;
                }
            }
        });
    Tensor::new(vec![b, c, out_h, out_w], out)
}

fn check_grad_shape<T: Scalar>(grad_out: &Tensor<T>, spec: &ResizeSpec) -> Result<(usize, usize)> {
    let (b, c, h, w) = grad_out.dims4()?;
    if (h, w) != (spec.dst_h, spec.dst_w) {
        return Err(Error::Shape(format!(
            "resize grad_out is {h}x{w}, spec expects {}x{}",
            spec.dst_h, spec.dst_w
        )));
    }
    Ok((b, c))
}

/// Transpose of [`resize_bilinear`]: each output gradient is scattered into
/// its four source neighbours with the forward weights.
pub fn resize_bilinear_backward<T: Scalar>(grad_out: &Tensor<T>, spec: &ResizeSpec) -> Result<Tensor<T>> {
    let (b, c) = check_grad_shape(grad_out, spec)?;
    let (h, w) = (spec.src_h, spec.src_w);
    let ys = linear_taps(h, spec.dst_h);
    let xs = linear_taps(w, spec.dst_w);
    let mut grad_in = vec![T::zero(); b * c * h * w];
    // Each plane owns its own output slice, so the scatter is race-free.
    grad_in
        .par_chunks_mut(h * w)
        .zip(grad_out.data().par_chunks(spec.dst_h * spec.dst_w))
        .for_each(|(dst, g)| {
            for (oy, ty) in ys.iter().enumerate() {
                let fy = T::lit(ty.frac);
                for (ox, tx) in xs.iter().enumerate() {
                    let fx = T::lit(tx.frac);
                    let v = g[oy * spec.dst_w + ox];
                    let top = v * (T::one() - fy);
                    let bottom = v * fy;
                    dst[ty.lo * w + tx.lo] += top * (T::one() - fx);
                    dst[ty.lo * w + tx.hi] += top * fx;
                    dst[ty.hi * w + tx.lo] += bottom * (T::one() - fx);
                    dst[ty.hi * w + tx.hi] += bottom * fx;
                }
            }
        });
    Tensor::new(vec![b, c, h, w], grad_in)
}

/// Nearest-neighbour resize: `out[y, x] = in[floor((y + 0.5) * yRatio), floor((x + 0.5) * xRatio)]`,
/// indices clamped to the last row/column.
pub fn resize_nearest<T: Scalar>(input: &Tensor<T>, out_h: usize, out_w: usize) -> Result<Tensor<T>> {
    ResizeSpec::for_input(input, (out_h, out_w), ResizeMode::Nearest)?;
    let (b, c, h, w) = input.dims4()?;
    let ys = nearest_indices(h, out_h);
    let xs = nearest_indices(w, out_w);
    let mut out = Vec::with_capacity(b * c * out_h * out_w);
    for src in input.data().chunks(h * w) {
        for &sy in &ys {
            out.extend(xs.iter().map(|&sx| src[sy * w + sx]));
        }
    }
    Tensor::new(vec![b, c, out_h, out_w], out)
}

pub fn resize_nearest_backward<T: Scalar>(grad_out: &Tensor<T>, spec: &ResizeSpec) -> Result<Tensor<T>> {
    let (b, c) = check_grad_shape(grad_out, spec)?;
    let (h, w) = (spec.src_h, spec.src_w);
    let ys = nearest_indices(h, spec.dst_h);
    let xs = nearest_indices(w, spec.dst_w);
    let mut grad_in = vec![T::zero(); b * c * h * w];
    for (dst, g) in grad_in
        .chunks_mut(h * w)
        .zip(grad_out.data().chunks(spec.dst_h * spec.dst_w))
    {
        for (oy, &sy) in ys.iter().enumerate() {
            for (ox, &sx) in xs.iter().enumerate() {
                dst[sy * w + sx] += g[oy * spec.dst_w + ox];
            }
        }
    }
    Tensor::new(vec![b, c, h, w], grad_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plane(h: usize, w: usize, values: &[f64]) -> Tensor<f64> {
        Tensor::new(vec![1, 1, h, w], values.to_vec()).unwrap()
    }

    #[test]
    fn half_pixel_upscale_of_two_samples() {
        let x = plane(1, 2, &[0.0, 4.0]);
        let y = resize_bilinear(&x, 1, 4).unwrap();
        assert_eq!(y.data(), &[0.0, 1.0, 3.0, 4.0]);
    }

    #[test]
    fn identity_size_is_exact_for_both_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::<f32>::randn(&[2, 3, 5, 7], 0.0, 1.0, &mut rng).unwrap();
        assert_eq!(resize_bilinear(&x, 5, 7).unwrap(), x);
        assert_eq!(resize_nearest(&x, 5, 7).unwrap(), x);
        let g = Tensor::<f32>::randn(&[2, 3, 5, 7], 0.0, 1.0, &mut rng).unwrap();
        let spec = ResizeSpec::new((5, 7), (5, 7), ResizeMode::Bilinear).unwrap();
        assert_eq!(resize_bilinear_backward(&g, &spec).unwrap(), g);
    }

    #[test]
    fn nearest_integer_upscale() {
        let x = plane(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let y = resize_nearest(&x, 4, 4).unwrap();
        #[rustfmt::skip]
        let expected = [
            1.0, 1.0, 2.0, 2.0,
            1.0, 1.0, 2.0, 2.0,
            3.0, 3.0, 4.0, 4.0,
            3.0, 3.0, 4.0, 4.0,
        ];
        assert_eq!(y.data(), &expected);
    }

    #[test]
    fn zero_target_is_rejected() {
        let x = plane(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(resize_bilinear(&x, 0, 3).is_err());
        assert!(resize_nearest(&x, 3, 0).is_err());
    }

    #[test]
    fn constant_round_trip_is_exact() {
        let x = Tensor::<f32>::full(&[1, 2, 37, 23], 0.3711).unwrap();
        let down = resize_bilinear(&x, 9, 5).unwrap();
        let up = resize_bilinear(&down, 37, 23).unwrap();
        assert!(up.data().iter().all(|&v| v == 0.3711));
    }

    #[test]
    fn outputs_bounded_by_input_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let (h, w) = (rng.random_range(1..12), rng.random_range(1..12));
            let x = Tensor::<f64>::randn(&[1, 2, h, w], 0.0, 1.0, &mut rng).unwrap();
            let (oh, ow) = (rng.random_range(1..20), rng.random_range(1..20));
            let y = resize_bilinear(&x, oh, ow).unwrap();
            assert!(y.min() >= x.min() - 1e-12 && y.max() <= x.max() + 1e-12);
            let n = resize_nearest(&x, oh, ow).unwrap();
            assert!(n.data().iter().all(|v| x.data().contains(v)));
        }
    }

    #[test]
    fn grad_shape_must_match_spec() {
        let spec = ResizeSpec::new((3, 3), (2, 5), ResizeMode::Bilinear).unwrap();
        let g = Tensor::<f64>::zeros(&[1, 1, 5, 2]).unwrap();
        assert!(resize_bilinear_backward(&g, &spec).is_err());
        assert!(resize_nearest_backward(&g, &spec).is_err());
    }
}
