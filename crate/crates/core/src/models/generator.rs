use rand::Rng;

use super::resblock::{ResBlock, ResBlockCache};
use crate::error::{Error, Result};
use crate::nn::{Activation, Conv2d, Dense, Module, Parameter};
use crate::resize::{resize, resize_backward, ResizeMode, ResizeSpec};
use crate::schedule::{SizeSchedule, STAGES};
use crate::tensor::{Scalar, Tensor};

/// Longest side seen during training. Larger targets still work but are
/// outside the trained range.
pub const TRAINING_MAX_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub z_dim: usize,
    pub base: (usize, usize),
    pub stage_channels: Vec<usize>,
    pub output_channels: usize,
    pub resize_mode: ResizeMode,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            z_dim: 100,
            base: (4, 4),
            stage_channels: vec![256, 128, 64, 32, 16],
            output_channels: 3,
            resize_mode: ResizeMode::Bilinear,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stage_channels.len() != STAGES {
            return Err(Error::InvalidArgument(format!(
                "generator needs {STAGES} stage widths, got {}",
                self.stage_channels.len()
            )));
        }
        if self.z_dim == 0
            || self.output_channels == 0
            || self.base.0 == 0
            || self.base.1 == 0
            || self.stage_channels.contains(&0)
        {
            return Err(Error::InvalidArgument(
                "generator dimensions must all be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Latent-vector generator whose output size is chosen per call.
///
/// `z -> dense -> reshape to C0 x base -> ResBlock`, then five times
/// `resize to the next schedule stage -> ResBlock`, then a 1x1 convolution
/// to the output channels and `tanh`. The requested size only drives the
/// resize layers, so no weight depends on it.
#[derive(Debug, Clone)]
pub struct Generator<T: Scalar = f32> {
    config: GeneratorConfig,
    project: Dense<T>,
    stem: ResBlock<T>,
    stages: Vec<ResBlock<T>>,
    to_image: Conv2d<T>,
}

#[derive(Debug, Clone)]
pub struct GeneratorCache<T: Scalar> {
    z: Tensor<T>,
    projected: Tensor<T>,
    stem: ResBlockCache<T>,
    stages: Vec<(ResizeSpec, ResBlockCache<T>)>,
    image_in: Tensor<T>,
    image_pre: Tensor<T>,
}

impl<T: Scalar> Generator<T> {
    pub fn new<R: Rng + ?Sized>(config: GeneratorConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let c0 = config.stage_channels[0];
        let (h0, w0) = config.base;
        let project = Dense::new("generator.project", config.z_dim, c0 * h0 * w0, rng)?;
        let stem = ResBlock::new("generator.stem", c0, c0, Activation::Relu, rng)?;
        let mut stages = Vec::with_capacity(STAGES);
        let mut prev = c0;
        for (k, &c) in config.stage_channels.iter().enumerate() {
            stages.push(ResBlock::new(
                &format!("generator.stage{}", k + 1),
                prev,
                c,
                Activation::Relu,
                rng,
            )?);
            prev = c;
        }
        let to_image = Conv2d::new("generator.to_image", prev, config.output_channels, 1, 1, rng)?;
        Ok(Generator {
            config,
            project,
            stem,
            stages,
            to_image,
        })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn schedule(&self, target: (usize, usize)) -> Result<SizeSchedule> {
        SizeSchedule::compute(self.config.base, target)
    }

    /// Draws a `batch x z_dim` standard normal latent batch.
    pub fn sample_latent<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Tensor<T>> {
        Tensor::randn(&[batch, self.config.z_dim], 0.0, 1.0, rng)
    }

    /// Generates `batch x C x H x W` images in `[-1, 1]` for `target = (H, W)`.
    /// `z` is either a single latent vector or a `batch x z_dim` matrix.
    pub fn generate(&self, z: &Tensor<T>, target: (usize, usize)) -> Result<Tensor<T>> {
        Ok(self.forward(z, target)?.0)
    }

    pub fn forward(&self, z: &Tensor<T>, target: (usize, usize)) -> Result<(Tensor<T>, GeneratorCache<T>)> {
        let z = self.check_latent(z)?;
        let schedule = self.schedule(target)?;
        if target.0 > TRAINING_MAX_SIZE || target.1 > TRAINING_MAX_SIZE {
            log::warn!(
                "generating {}x{}, beyond the {TRAINING_MAX_SIZE}px training range",
                target.0,
                target.1
            );
        }
        let batch = z.shape()[0];
        let (h0, w0) = self.config.base;
        let projected = self.project.forward(&z)?;
        let x = Activation::Relu
            .forward(&projected)
            .reshape(&[batch, self.config.stage_channels[0], h0, w0])?;
        let (mut x, stem) = self.stem.forward(&x)?;
        let mut stages = Vec::with_capacity(STAGES);
        for (block, &(h, w)) in self.stages.iter().zip(&schedule.stages) {
            let (_, _, cur_h, cur_w) = x.dims4()?;
            let spec = ResizeSpec::new((cur_h, cur_w), (h, w), self.config.resize_mode)?;
            let resized = resize(&x, h, w, spec.mode)?;
            let (y, cache) = block.forward(&resized)?;
            stages.push((spec, cache));
            x = y;
        }
        let image_pre = self.to_image.forward(&x)?;
        let image = Activation::Tanh.forward(&image_pre);
        Ok((
            image,
            GeneratorCache {
                z,
                projected,
                stem,
                stages,
                image_in: x,
                image_pre,
            },
        ))
    }

    /// Accumulates parameter gradients and returns the gradient with respect to `z`.
    pub fn backward(&mut self, cache: &GeneratorCache<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let g = Activation::Tanh.backward(&cache.image_pre, grad_out)?;
        let mut g = self.to_image.backward(&cache.image_in, &g)?;
        for (block, (spec, block_cache)) in self.stages.iter_mut().zip(&cache.stages).rev() {
            let g_resized = block.backward(block_cache, &g)?;
            g = resize_backward(&g_resized, spec)?;
        }
        let g = self.stem.backward(&cache.stem, &g)?;
        let g = g.reshape(cache.projected.shape())?;
        let g = Activation::Relu.backward(&cache.projected, &g)?;
        self.project.backward(&cache.z, &g)
    }

    fn check_latent(&self, z: &Tensor<T>) -> Result<Tensor<T>> {
        let z_dim = self.config.z_dim;
        let z = match z.shape() {
            [n] if *n == z_dim => z.clone().reshape(&[1, z_dim])?,
            [_, n] if *n == z_dim => z.clone(),
            other => {
                return Err(Error::Shape(format!(
                    "latent must be [{z_dim}] or [batch, {z_dim}], got {other:?}"
                )))
            }
        };
        if !z.all_finite() {
            return Err(Error::NonFinite("latent vector".into()));
        }
        Ok(z)
    }
}

impl<T: Scalar> Module<T> for Generator<T> {
    fn visit(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        self.project.visit(f);
        self.stem.visit(f);
        for s in &self.stages {
            s.visit(f);
        }
        self.to_image.visit(f);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        self.project.visit_mut(f);
        self.stem.visit_mut(f);
        for s in &mut self.stages {
            s.visit_mut(f);
        }
        self.to_image.visit_mut(f);
    }
}
