//! Finite-difference and adjoint checks of every layer, run in 64-bit.
//!
//! Each case draws random shapes and values, contracts the layer output
//! with a random weight tensor `r` so the loss is `sum(r * f(x))`, and
//! compares `backward(r)` with central differences of that loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::models::{Discriminator, DiscriminatorConfig, Generator, GeneratorConfig, ResBlock};
use crate::nn::{
    bce_loss, bce_loss_backward, conv2d_same, conv2d_same_backward, dense, dense_backward, global_average_pool,
    global_average_pool_backward, grad_check, Activation, GradCheck, Module,
};
use crate::resize::{resize, resize_backward, ResizeMode, ResizeSpec};
use crate::tensor::Tensor;

pub const DEFAULT_CASES: usize = 20;
pub const LAYER_TOLERANCE: f64 = 1e-5;
/// Composite generator-to-discriminator chain.
pub const CHAIN_TOLERANCE: f64 = 1e-4;
pub const ADJOINT_TOLERANCE: f64 = 1e-6;
pub const FD_STEP: f64 = 1e-3;
/// Smaller step for piecewise-smooth composites, keeping probes off kinks,
/// and for the log terms of BCE, whose third derivative is large near 0 and 1.
const FINE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    pub layer: &'static str,
    pub cases: usize,
    pub elements: usize,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl LayerReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error.is_finite() && self.max_rel_error < self.tolerance
    }
}

fn randn(shape: &[usize], rng: &mut ChaCha8Rng) -> Result<Tensor<f64>> {
    Tensor::randn(shape, 0.0, 1.0, rng)
}

/// Random normal values pushed at least 0.05 away from zero, so kinked
/// activations are not probed across their kink.
fn off_kink(shape: &[usize], rng: &mut ChaCha8Rng) -> Result<Tensor<f64>> {
    Ok(randn(shape, rng)?.map(|v| if v.abs() < 0.05 { v + 0.1 * v.signum() } else { v }))
}

fn contract(r: &Tensor<f64>, y: &Tensor<f64>) -> Result<f64> {
    r.dot(y)
}

struct Suite {
    rng: ChaCha8Rng,
    cases: usize,
}

impl Suite {
    fn run(
        &mut self,
        layer: &'static str,
        tolerance: f64,
        mut case: impl FnMut(&mut ChaCha8Rng) -> Result<GradCheck>,
    ) -> Result<LayerReport> {
        let mut worst: Option<GradCheck> = None;
        for _ in 0..self.cases {
            let c = case(&mut self.rng)?;
            worst = Some(match worst {
                Some(w) => w.merge(c),
                None => c,
            });
        }
        let w = worst.expect("at least one case");
        Ok(LayerReport {
            layer,
            cases: self.cases,
            elements: w.elements,
            max_rel_error: w.max_rel_error,
            tolerance,
        })
    }
}

fn dense_case(rng: &mut ChaCha8Rng) -> Result<GradCheck> {
    let (b, n, m) = (rng.random_range(1..4), rng.random_range(1..6), rng.random_range(1..6));
    let x = randn(&[b, n], rng)?;
    let w = randn(&[n, m], rng)?;
    let bias = randn(&[m], rng)?;
    let r = randn(&[b, m], rng)?;
    let g = dense_backward(&x, &w, &r)?;
    let gx = grad_check(|t| contract(&r, &dense(t, &w, &bias)?), &x, &g.input, FD_STEP)?;
    let gw = grad_check(|t| contract(&r, &dense(&x, t, &bias)?), &w, &g.weight, FD_STEP)?;
    let gb = grad_check(|t| contract(&r, &dense(&x, &w, t)?), &bias, &g.bias, FD_STEP)?;
    Ok(gx.merge(gw).merge(gb))
}

fn conv_case(rng: &mut ChaCha8Rng) -> Result<GradCheck> {
    let k = [1, 3, 5][rng.random_range(0..3)];
    let stride = rng.random_range(1..=2);
    let (b, ci, co) = (rng.random_range(1..3), rng.random_range(1..4), rng.random_range(1..4));
    let (h, w) = (rng.random_range(1..8), rng.random_range(1..8));
    let x = randn(&[b, ci, h, w], rng)?;
    let wt = randn(&[co, ci, k, k], rng)?;
    let bias = randn(&[co], rng)?;
    let y = conv2d_same(&x, &wt, &bias, stride)?;
    let r = randn(y.shape(), rng)?;
    let g = conv2d_same_backward(&x, &wt, &r, stride)?;
    let gx = grad_check(|t| contract(&r, &conv2d_same(t, &wt, &bias, stride)?), &x, &g.input, FD_STEP)?;
    let gw = grad_check(|t| contract(&r, &conv2d_same(&x, t, &bias, stride)?), &wt, &g.weight, FD_STEP)?;
    let gb = grad_check(|t| contract(&r, &conv2d_same(&x, &wt, t, stride)?), &bias, &g.bias, FD_STEP)?;
    Ok(gx.merge(gw).merge(gb))
}

fn pool_case(rng: &mut ChaCha8Rng) -> Result<GradCheck> {
    let shape = [rng.random_range(1..3), rng.random_range(1..4), rng.random_range(1..7), rng.random_range(1..7)];
    let x = randn(&shape, rng)?;
    let r = randn(&shape[..2], rng)?;
    let g = global_average_pool_backward(&shape, &r)?;
    grad_check(|t| contract(&r, &global_average_pool(t)?), &x, &g, FD_STEP)
}

fn resize_case(mode: ResizeMode) -> impl FnMut(&mut ChaCha8Rng) -> Result<GradCheck> {
    move |rng| {
        let src = (rng.random_range(1..7), rng.random_range(1..7));
        let dst = (rng.random_range(1..10), rng.random_range(1..10));
        let c = rng.random_range(1..3);
        let x = randn(&[1, c, src.0, src.1], rng)?;
        let spec = ResizeSpec::new(src, dst, mode)?;
        let r = randn(&[1, c, dst.0, dst.1], rng)?;
        let g = resize_backward(&r, &spec)?;
        grad_check(|t| contract(&r, &resize(t, dst.0, dst.1, mode)?), &x, &g, FD_STEP)
    }
}

fn bce_case(rng: &mut ChaCha8Rng) -> Result<GradCheck> {
    let n = rng.random_range(1..9);
    let p = Tensor::from_fn(&[n, 1], |_| rng.random_range(0.05..0.95))?;
    let t = Tensor::from_fn(&[n, 1], |_| if rng.random_bool(0.5) { 1.0 } else { 0.0 })?;
    let g = bce_loss_backward(&p, &t)?;
    grad_check(|q| bce_loss(q, &t), &p, &g, FINE_STEP)
}

fn activation_case(kind: Activation) -> impl FnMut(&mut ChaCha8Rng) -> Result<GradCheck> {
    move |rng| {
        let shape = [rng.random_range(1..4), rng.random_range(1..6)];
        let x = off_kink(&shape, rng)?;
        let r = randn(&shape, rng)?;
        let g = kind.backward(&x, &r)?;
        grad_check(|t| contract(&r, &kind.forward(t)), &x, &g, FD_STEP)
    }
}

fn resblock_case(rng: &mut ChaCha8Rng) -> Result<GradCheck> {
    let (ci, co) = (rng.random_range(1..4), rng.random_range(1..4));
    let mut block = ResBlock::<f64>::new("check", ci, co, Activation::Relu, rng)?;
    block.visit_mut(&mut |p| p.value = p.value.scale(15.0));
    let x = off_kink(&[1, ci, rng.random_range(1..6), rng.random_range(1..6)], rng)?;
    let (y, cache) = block.forward(&x)?;
    let r = randn(y.shape(), rng)?;
    let g = block.backward(&cache, &r)?;
    grad_check(|t| contract(&r, &block.forward(t)?.0), &x, &g, FINE_STEP)
}

/// Loss `D(G(z, size))` differentiated with respect to `z`.
fn chain_case(rng: &mut ChaCha8Rng) -> Result<GradCheck> {
    let gen_cfg = GeneratorConfig {
        z_dim: 4,
        stage_channels: vec![4, 4, 3, 3, 2],
        ..GeneratorConfig::default()
    };
    let disc_cfg = DiscriminatorConfig {
        conv_channels: vec![3, 4, 4, 4],
        ..DiscriminatorConfig::default()
    };
    let mut g = Generator::<f64>::new(gen_cfg, rng)?;
    let mut d = Discriminator::<f64>::new(disc_cfg, rng)?;
    // The 0.02 training init makes this chain's gradient vanish into rounding noise.
    g.visit_mut(&mut |p| p.value = p.value.scale(15.0));
    d.visit_mut(&mut |p| p.value = p.value.scale(15.0));
    let size = (rng.random_range(16..21), rng.random_range(16..21));
    let z = randn(&[1, 4], rng)?;
    let (img, g_cache) = g.forward(&z, size)?;
    let (p, d_cache) = d.forward(&img)?;
    let grad_img = d.backward(&d_cache, &Tensor::full(p.shape(), 1.0)?)?;
    let grad_z = g.backward(&g_cache, &grad_img)?;
    grad_check(|t| Ok(d.classify(&g.generate(t, size)?)?.sum()), &z, &grad_z, FINE_STEP)
}

/// Checks every layer on `cases` random cases each.
pub fn gradient_suite(cases: usize, seed: u64) -> Result<Vec<LayerReport>> {
    let mut s = Suite {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cases: cases.max(1),
    };
    Ok(vec![
        s.run("dense", LAYER_TOLERANCE, dense_case)?,
        s.run("conv2d_same", LAYER_TOLERANCE, conv_case)?,
        s.run("global_average_pool", LAYER_TOLERANCE, pool_case)?,
        s.run("resize_bilinear", LAYER_TOLERANCE, resize_case(ResizeMode::Bilinear))?,
        s.run("resize_nearest", LAYER_TOLERANCE, resize_case(ResizeMode::Nearest))?,
        s.run("bce_loss", LAYER_TOLERANCE, bce_case)?,
        s.run("relu", LAYER_TOLERANCE, activation_case(Activation::Relu))?,
        s.run("leaky_relu", LAYER_TOLERANCE, activation_case(Activation::LEAKY))?,
        s.run("tanh", LAYER_TOLERANCE, activation_case(Activation::Tanh))?,
        s.run("sigmoid", LAYER_TOLERANCE, activation_case(Activation::Sigmoid))?,
        s.run("resnet_block", LAYER_TOLERANCE, resblock_case)?,
        s.run("generator_to_discriminator", CHAIN_TOLERANCE, chain_case)?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointReport {
    pub mode: ResizeMode,
    pub cases: usize,
    pub max_rel_error: f64,
}

/// `<R x, y>` against `<x, R^T y>` for random specs.
pub fn adjoint_suite(cases: usize, seed: u64) -> Result<Vec<AdjointReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    [ResizeMode::Bilinear, ResizeMode::Nearest]
        .into_iter()
        .map(|mode| {
            let mut worst = 0.0f64;
            for _ in 0..cases {
                let src = (rng.random_range(1..40), rng.random_range(1..40));
                let dst = (rng.random_range(1..40), rng.random_range(1..40));
                let (b, c) = (rng.random_range(1..3), rng.random_range(1..4));
                let x = randn(&[b, c, src.0, src.1], &mut rng)?;
                let y = randn(&[b, c, dst.0, dst.1], &mut rng)?;
                let spec = ResizeSpec::new(src, dst, mode)?;
                let lhs = resize(&x, dst.0, dst.1, mode)?.dot(&y)?;
                let rhs = x.dot(&resize_backward(&y, &spec)?)?;
                worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12));
            }
            Ok(AdjointReport {
                mode,
                cases,
                max_rel_error: worst,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        for r in gradient_suite(3, 1).unwrap() {
            assert!(r.passed(), "{r:?}");
        }
        for a in adjoint_suite(5, 1).unwrap() {
            assert!(a.max_rel_error < ADJOINT_TOLERANCE, "{a:?}");
        }
    }
}
