use rand::Rng;

use crate::error::Result;
use crate::nn::{Activation, Conv2d, Module, Parameter};
use crate::tensor::{Scalar, Tensor};

/// Two 3x3 same-padded convolutions with an additive skip path. The skip is
/// a 1x1 projection when the channel count changes.
#[derive(Debug, Clone)]
pub struct ResBlock<T: Scalar = f32> {
    conv1: Conv2d<T>,
    conv2: Conv2d<T>,
    skip: Option<Conv2d<T>>,
    act: Activation,
}

/// Intermediate values needed by [`ResBlock::backward`].
#[derive(Debug, Clone)]
pub struct ResBlockCache<T: Scalar> {
    input: Tensor<T>,
    pre1: Tensor<T>,
    act1: Tensor<T>,
    pre_out: Tensor<T>,
}

impl<T: Scalar> ResBlock<T> {
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        act: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let conv1 = Conv2d::new(&format!("{name}.conv1"), in_channels, out_channels, 3, 1, rng)?;
        let conv2 = Conv2d::new(&format!("{name}.conv2"), out_channels, out_channels, 3, 1, rng)?;
        let skip = if in_channels != out_channels {
            Some(Conv2d::new(&format!("{name}.skip"), in_channels, out_channels, 1, 1, rng)?)
        } else {
            None
        };
        Ok(ResBlock { conv1, conv2, skip, act })
    }

    pub fn out_channels(&self) -> usize {
        self.conv2.out_channels()
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<(Tensor<T>, ResBlockCache<T>)> {
        let pre1 = self.conv1.forward(input)?;
        let act1 = self.act.forward(&pre1);
        let mut pre_out = self.conv2.forward(&act1)?;
        match &self.skip {
            Some(proj) => pre_out.add_assign(&proj.forward(input)?)?,
            None => pre_out.add_assign(input)?,
        }
        let out = self.act.forward(&pre_out);
        Ok((
            out,
            ResBlockCache {
                input: input.clone(),
                pre1,
                act1,
                pre_out,
            },
        ))
    }

    pub fn backward(&mut self, cache: &ResBlockCache<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let g_sum = self.act.backward(&cache.pre_out, grad_out)?;
        let g_act1 = self.conv2.backward(&cache.act1, &g_sum)?;
        let g_pre1 = self.act.backward(&cache.pre1, &g_act1)?;
        let mut g_in = self.conv1.backward(&cache.input, &g_pre1)?;
        match &mut self.skip {
            Some(proj) => g_in.add_assign(&proj.backward(&cache.input, &g_sum)?)?,
            None => g_in.add_assign(&g_sum)?,
        }
        Ok(g_in)
    }
}

impl<T: Scalar> Module<T> for ResBlock<T> {
    fn visit(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        self.conv1.visit(f);
        self.conv2.visit(f);
        if let Some(s) = &self.skip {
            s.visit(f);
        }
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        self.conv1.visit_mut(f);
        self.conv2.visit_mut(f);
        if let Some(s) = &mut self.skip {
            s.visit_mut(f);
        }
    }
}
