//! Layers with explicit forward and backward passes, the Adam optimizer and
//! a finite-difference gradient checker.
//!
//! Layers cache nothing themselves: `backward` takes the same input that was
//! given to `forward`, returns the gradient with respect to it and adds
//! parameter gradients into each [`Parameter::grad`].

mod activation;
mod adam;
mod conv;
mod dense;
pub mod gradcheck;
mod loss;
mod pool;

pub use activation::{activation, activation_backward, Activation};
pub use adam::{AdamConfig, AdamState, Moments};
pub use conv::{conv2d_same, conv2d_same_backward, Conv2d, ConvGrads};
pub use dense::{dense, dense_backward, Dense, DenseGrads};
pub use gradcheck::{grad_check, relative_error, GradCheck};
pub use loss::{
    bce_loss, bce_loss_backward, softmax, softmax_cross_entropy, BCE_EPSILON,
};
pub use pool::{global_average_pool, global_average_pool_backward};

use rand::Rng;

use crate::error::Result;
use crate::tensor::{Scalar, Tensor};

/// Standard deviation of the normal weight initializer.
pub const INIT_STD: f64 = 0.02;

/// A named trainable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T: Scalar = f32> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
}

impl<T: Scalar> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor<T>) -> Self {
        let grad = value.zeros_like();
        Parameter {
            name: name.into(),
            value,
            grad,
        }
    }

    /// Weights drawn from `Normal(0, INIT_STD)`.
    pub fn normal<R: Rng + ?Sized>(name: impl Into<String>, shape: &[usize], rng: &mut R) -> Result<Self> {
        Ok(Self::new(name, Tensor::randn(shape, 0.0, INIT_STD, rng)?))
    }

    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Result<Self> {
        Ok(Self::new(name, Tensor::zeros(shape)?))
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().iter_mut().for_each(|g| *g = T::zero());
    }
}

/// Anything that owns parameters.
pub trait Module<T: Scalar> {
    fn visit(&self, f: &mut dyn FnMut(&Parameter<T>));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>));

    fn parameter_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |p| n += p.value.len());
        n
    }

    fn zero_grad(&mut self) {
        self.visit_mut(&mut |p| p.zero_grad());
    }

    fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.visit(&mut |p| names.push(p.name.clone()));
        names
    }

    fn parameter_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut shapes = Vec::new();
        self.visit(&mut |p| shapes.push((p.name.clone(), p.value.shape().to_vec())));
        shapes
    }
}
