use crate::error::Result;
use crate::tensor::{Scalar, Tensor};

/// Elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
}

impl Activation {
    /// Leaky ReLU with the discriminator slope of 0.2.
    pub const LEAKY: Activation = Activation::LeakyRelu(0.2);

    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::LeakyRelu(alpha) => {
                if x > T::zero() {
                    x
                } else {
                    x * T::lit(alpha)
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative at pre-activation `x`.
    pub fn derivative<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::LeakyRelu(alpha) => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::lit(alpha)
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                T::one() - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (T::one() - s)
            }
        }
    }

    pub fn forward<T: Scalar>(self, input: &Tensor<T>) -> Tensor<T> {
        input.map(|x| self.apply(x))
    }

    /// Gradient with respect to the pre-activation `input`.
    pub fn backward<T: Scalar>(self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        input.zip_map(grad_out, |x, g| g * self.derivative(x))
    }
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn activation<T: Scalar>(input: &Tensor<T>, kind: Activation) -> Tensor<T> {
    kind.forward(input)
}

pub fn activation_backward<T: Scalar>(
    input: &Tensor<T>,
    grad_out: &Tensor<T>,
    kind: Activation,
) -> Result<Tensor<T>> {
    kind.backward(input, grad_out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(Activation::Relu.apply(-1.0f64), 0.0);
        assert_eq!(Activation::Relu.apply(2.0f64), 2.0);
        assert!((Activation::LEAKY.apply(-10.0f64) + 2.0).abs() < 1e-12);
        assert_eq!(Activation::Sigmoid.apply(0.0f64), 0.5);
        assert_eq!(Activation::Tanh.apply(0.0f64), 0.0);
    }

    #[test]
    fn sigmoid_is_stable_for_large_inputs() {
        assert_eq!(Activation::Sigmoid.apply(-1000.0f32), 0.0);
        assert_eq!(Activation::Sigmoid.apply(1000.0f32), 1.0);
    }
}
