use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{
    global_average_pool, global_average_pool_backward, Activation, Conv2d, Dense, Module, Parameter,
};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorConfig {
    pub input_channels: usize,
    /// Widths of the stride-2 3x3 convolutions.
    pub conv_channels: Vec<usize>,
    pub min_input: (usize, usize),
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig {
            input_channels: 3,
            conv_channels: vec![32, 64, 128, 256],
            min_input: (16, 16),
        }
    }
}

/// Stride-2 convolution stack, global average pooling and a dense head with
/// a sigmoid output. Defined for any input at least `min_input` in size.
#[derive(Debug, Clone)]
pub struct Discriminator<T: Scalar = f32> {
    config: DiscriminatorConfig,
    convs: Vec<Conv2d<T>>,
    head: Dense<T>,
}

#[derive(Debug, Clone)]
pub struct DiscriminatorCache<T: Scalar> {
    conv_inputs: Vec<Tensor<T>>,
    conv_pre: Vec<Tensor<T>>,
    pooled_shape: Vec<usize>,
    pooled: Tensor<T>,
    logits: Tensor<T>,
}

impl<T: Scalar> Discriminator<T> {
    pub fn new<R: Rng + ?Sized>(config: DiscriminatorConfig, rng: &mut R) -> Result<Self> {
        if config.conv_channels.is_empty() || config.conv_channels.contains(&0) || config.input_channels == 0 {
            return Err(Error::InvalidArgument(
                "discriminator needs at least one convolution with positive widths".into(),
            ));
        }
        let mut convs = Vec::with_capacity(config.conv_channels.len());
        let mut prev = config.input_channels;
        for (i, &c) in config.conv_channels.iter().enumerate() {
            convs.push(Conv2d::new(&format!("discriminator.conv{}", i + 1), prev, c, 3, 2, rng)?);
            prev = c;
        }
        let head = Dense::new("discriminator.head", prev, 1, rng)?;
        Ok(Discriminator { config, convs, head })
    }

    pub fn config(&self) -> &DiscriminatorConfig {
        &self.config
    }

    /// Probability that each batch item is real, shape `B x 1`.
    pub fn classify(&self, images: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward(images)?.0)
    }

    pub fn forward(&self, images: &Tensor<T>) -> Result<(Tensor<T>, DiscriminatorCache<T>)> {
        let (_, c, h, w) = images.dims4()?;
        let (min_h, min_w) = self.config.min_input;
        if h < min_h || w < min_w {
            return Err(Error::InputTooSmall {
                height: h,
                width: w,
                min_height: min_h,
                min_width: min_w,
            });
        }
        if c != self.config.input_channels {
            return Err(Error::Shape(format!(
                "discriminator expects {} channels, got {c}",
                self.config.input_channels
            )));
        }
        let mut conv_inputs = Vec::with_capacity(self.convs.len());
        let mut conv_pre = Vec::with_capacity(self.convs.len());
        let mut x = images.clone();
        for conv in &self.convs {
            let pre = conv.forward(&x)?;
            conv_inputs.push(x);
            x = Activation::LEAKY.forward(&pre);
            conv_pre.push(pre);
        }
        let pooled = global_average_pool(&x)?;
        let logits = self.head.forward(&pooled)?;
        let probs = Activation::Sigmoid.forward(&logits);
        Ok((
            probs,
            DiscriminatorCache {
                conv_inputs,
                conv_pre,
                pooled_shape: x.shape().to_vec(),
                pooled,
                logits,
            },
        ))
    }

    /// Accumulates parameter gradients and returns the gradient with respect
    /// to the input images.
    pub fn backward(&mut self, cache: &DiscriminatorCache<T>, grad_probs: &Tensor<T>) -> Result<Tensor<T>> {
        let g = Activation::Sigmoid.backward(&cache.logits, grad_probs)?;
        let g = self.head.backward(&cache.pooled, &g)?;
        let mut g = global_average_pool_backward(&cache.pooled_shape, &g)?;
        for ((conv, input), pre) in self
            .convs
            .iter_mut()
            .zip(&cache.conv_inputs)
            .zip(&cache.conv_pre)
            .rev()
        {
            let g_pre = Activation::LEAKY.backward(pre, &g)?;
            g = conv.backward(input, &g_pre)?;
        }
        Ok(g)
    }
}

impl<T: Scalar> Module<T> for Discriminator<T> {
    fn visit(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        for c in &self.convs {
            c.visit(f);
        }
        self.head.visit(f);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        for c in &mut self.convs {
            c.visit_mut(f);
        }
        self.head.visit_mut(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn any_size_above_minimum_gives_one_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = Discriminator::<f32>::new(DiscriminatorConfig::default(), &mut rng).unwrap();
        for &(h, w) in &[(128, 128), (89, 128), (16, 16)] {
            let x = Tensor::randn(&[1, 3, h, w], 0.0, 0.5, &mut rng).unwrap();
            let p = d.classify(&x).unwrap();
            assert_eq!(p.shape(), &[1, 1]);
            assert!(p.data()[0] > 0.0 && p.data()[0] < 1.0);
        }
        let zero = Tensor::zeros(&[2, 3, 20, 33]).unwrap();
        let p = d.classify(&zero).unwrap();
        assert!(p.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn undersized_input_names_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = Discriminator::<f32>::new(DiscriminatorConfig::default(), &mut rng).unwrap();
        let err = d.classify(&Tensor::zeros(&[1, 3, 15, 128]).unwrap()).unwrap_err();
        assert!(err.to_string().contains("16"), "{err}");
    }
}
