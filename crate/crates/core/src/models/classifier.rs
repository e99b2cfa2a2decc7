use rand::Rng;

use crate::error::Result;
use crate::nn::{
    global_average_pool, global_average_pool_backward, softmax, Activation, Conv2d, Dense, Module,
    Parameter,
};
use crate::tensor::{Scalar, Tensor};

/// Small convolutional classifier ending in global average pooling, so it
/// accepts images of any size without resizing.
#[derive(Debug, Clone)]
pub struct Classifier<T: Scalar = f32> {
    convs: Vec<Conv2d<T>>,
    head: Dense<T>,
}

#[derive(Debug, Clone)]
pub struct ClassifierCache<T: Scalar> {
    conv_inputs: Vec<Tensor<T>>,
    conv_pre: Vec<Tensor<T>>,
    pooled_shape: Vec<usize>,
    pooled: Tensor<T>,
}

impl<T: Scalar> Classifier<T> {
    pub fn new<R: Rng + ?Sized>(
        input_channels: usize,
        widths: &[usize],
        classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut convs = Vec::with_capacity(widths.len());
        let mut prev = input_channels;
        for (i, &c) in widths.iter().enumerate() {
            let stride = if i == 0 { 1 } else { 2 };
            let mut conv = Conv2d::new(&format!("classifier.conv{}", i + 1), prev, c, 3, stride, rng)?;
            // He-style scale: the GAN's 0.02 init is too small for a quick classifier fit.
            let std = (2.0 / (prev * 9) as f64).sqrt();
            conv.weight.value = Tensor::randn(conv.weight.value.shape(), 0.0, std, rng)?;
            convs.push(conv);
            prev = c;
        }
        let head = Dense::new("classifier.head", prev, classes, rng)?;
        Ok(Classifier { convs, head })
    }

    pub fn classes(&self) -> usize {
        self.head.outputs()
    }

    pub fn forward(&self, images: &Tensor<T>) -> Result<(Tensor<T>, ClassifierCache<T>)> {
        let mut conv_inputs = Vec::new();
        let mut conv_pre = Vec::new();
        let mut x = images.clone();
        for conv in &self.convs {
            let pre = conv.forward(&x)?;
            conv_inputs.push(x);
            x = Activation::LEAKY.forward(&pre);
            conv_pre.push(pre);
        }
        let pooled = global_average_pool(&x)?;
        let logits = self.head.forward(&pooled)?;
        Ok((
            logits,
            ClassifierCache {
                conv_inputs,
                conv_pre,
                pooled_shape: x.shape().to_vec(),
                pooled,
            },
        ))
    }

    /// Class distribution per batch item, `B x classes`.
    pub fn probabilities(&self, images: &Tensor<T>) -> Result<Tensor<T>> {
        softmax(&self.forward(images)?.0)
    }

    pub fn backward(&mut self, cache: &ClassifierCache<T>, grad_logits: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.head.backward(&cache.pooled, grad_logits)?;
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

impl<T: Scalar> Module<T> for Classifier<T> {
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
