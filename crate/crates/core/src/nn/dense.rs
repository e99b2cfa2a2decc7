use rand::Rng;

use super::{Module, Parameter};
use crate::error::{Error, Result};
use crate::tensor::{gemm, MatRef, Scalar, Tensor};

fn check<T: Scalar>(input: &Tensor<T>, weight: &Tensor<T>) -> Result<(usize, usize, usize)> {
    let (b, n) = input.dims2()?;
    let (wn, m) = weight.dims2()?;
    if n != wn {
        return Err(Error::Shape(format!(
            "dense input has {n} features, weight expects {wn}"
        )));
    }
    Ok((b, n, m))
}

/// `input (B x N) * weight (N x M) + bias (M)`.
pub fn dense<T: Scalar>(input: &Tensor<T>, weight: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, n, m) = check(input, weight)?;
    if bias.len() != m {
        return Err(Error::Shape(format!("bias has {} entries, expected {m}", bias.len())));
    }
    let mut out: Vec<T> = (0..b).flat_map(|_| bias.data().iter().copied()).collect();
    gemm(
        b,
        n,
        m,
        MatRef::rows(input.data(), n),
        MatRef::rows(weight.data(), m),
        T::one(),
        &mut out,
    );
    Tensor::new(vec![b, m], out)
}

#[derive(Debug, Clone)]
pub struct DenseGrads<T: Scalar> {
    pub input: Tensor<T>,
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

pub fn dense_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<DenseGrads<T>> {
    let (b, n, m) = check(input, weight)?;
    if grad_out.shape() != [b, m] {
        return Err(Error::Shape(format!(
            "dense grad_out has shape {:?}, expected [{b}, {m}]",
            grad_out.shape()
        )));
    }
    let mut gw = vec![T::zero(); n * m];
    gemm(
        n,
        b,
        m,
        MatRef::transposed(input.data(), n),
        MatRef::rows(grad_out.data(), m),
        T::zero(),
        &mut gw,
    );
    let mut gx = vec![T::zero(); b * n];
    gemm(
        b,
        m,
        n,
        MatRef::rows(grad_out.data(), m),
        MatRef::transposed(weight.data(), m),
        T::zero(),
        &mut gx,
    );
    let mut gb = vec![T::zero(); m];
    for row in grad_out.data().chunks(m) {
        for (acc, &g) in gb.iter_mut().zip(row) {
            *acc += g;
        }
    }
    Ok(DenseGrads {
        input: Tensor::new(vec![b, n], gx)?,
        weight: Tensor::new(vec![n, m], gw)?,
        bias: Tensor::new(vec![m], gb)?,
    })
}

/// Fully connected layer.
#[derive(Debug, Clone)]
pub struct Dense<T: Scalar = f32> {
    pub weight: Parameter<T>,
    pub bias: Parameter<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new<R: Rng + ?Sized>(name: &str, inputs: usize, outputs: usize, rng: &mut R) -> Result<Self> {
        Ok(Dense {
            weight: Parameter::normal(format!("{name}.weight"), &[inputs, outputs], rng)?,
            bias: Parameter::zeros(format!("{name}.bias"), &[outputs])?,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        dense(input, &self.weight.value, &self.bias.value)
    }

    pub fn backward(&mut self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let grads = dense_backward(input, &self.weight.value, grad_out)?;
        self.weight.grad.add_assign(&grads.weight)?;
        self.bias.grad.add_assign(&grads.bias)?;
        Ok(grads.input)
    }
}

impl<T: Scalar> Module<T> for Dense<T> {
    fn visit(&self, f: &mut dyn FnMut(&Parameter<T>)) {
        f(&self.weight);
        f(&self.bias);
    }
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<T>)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_weight_is_passthrough() {
        let x = Tensor::<f64>::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        let w = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(dense(&x, &w, &Tensor::zeros(&[2]).unwrap()).unwrap(), x);
        let shifted = dense(&x, &w, &Tensor::full(&[2], 1.0).unwrap()).unwrap();
        assert_eq!(shifted.data(), &[2.0, 3.0]);
    }

    #[test]
    fn matches_triple_loop_matmul() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Tensor::<f64>::randn(&[2, 3], 0.0, 1.0, &mut rng).unwrap();
        let w = Tensor::<f64>::randn(&[3, 4], 0.0, 1.0, &mut rng).unwrap();
        let b = Tensor::<f64>::randn(&[4], 0.0, 1.0, &mut rng).unwrap();
        let y = dense(&x, &w, &b).unwrap();
        for i in 0..2 {
            for j in 0..4 {
                let mut acc = b.data()[j];
                for k in 0..3 {
                    acc += x.data()[i * 3 + k] * w.data()[k * 4 + j];
                }
                assert!((y.data()[i * 4 + j] - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_inner_dimension_mismatch() {
        let x = Tensor::<f32>::zeros(&[2, 3]).unwrap();
        let w = Tensor::<f32>::zeros(&[4, 2]).unwrap();
        assert!(dense(&x, &w, &Tensor::zeros(&[2]).unwrap()).is_err());
    }
}
