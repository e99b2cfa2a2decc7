use super::{Module, Parameter};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T: Scalar> {
    pub name: String,
    pub m: Tensor<T>,
    pub v: Tensor<T>,
}

/// Optimizer state for every parameter of one model, in visit order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T: Scalar = f32> {
    pub config: AdamConfig,
    pub t: u64,
    pub moments: Vec<Moments<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<M: Module<T> + ?Sized>(config: AdamConfig, model: &M) -> Self {
        let mut moments = Vec::new();
        model.visit(&mut |p| {
            moments.push(Moments {
                name: p.name.clone(),
                m: p.value.zeros_like(),
                v: p.value.zeros_like(),
            })
        });
        AdamState { config, t: 0, moments }
    }

    /// One bias-corrected Adam update of every parameter from its `grad`.
    pub fn step<M: Module<T> + ?Sized>(&mut self, model: &mut M) -> Result<()> {
        self.t += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let (lr, eps) = (T::lit(c.lr), T::lit(c.eps));
        let (bc1, bc2) = (T::lit(bc1), T::lit(bc2));
        let mut index = 0;
        let mut failure = None;
        model.visit_mut(&mut |p: &mut Parameter<T>| {
            if failure.is_some() {
                return;
            }
            let Some(state) = self.moments.get_mut(index) else {
                failure = Some(format!("no optimizer state for `{}`", p.name));
                return;
            };
            index += 1;
            if state.name != p.name || state.m.shape() != p.value.shape() {
                failure = Some(format!(
                    "optimizer state `{}` does not match parameter `{}`",
                    state.name, p.name
                ));
                return;
            }
            let values = p.value.data_mut().iter_mut();
            let grads = p.grad.data().iter();
            let ms = state.m.data_mut().iter_mut();
            let vs = state.v.data_mut().iter_mut();
            for (((x, &g), m), v) in values.zip(grads).zip(ms).zip(vs) {
                *m = b1 * *m + (T::one() - b1) * g;
                *v = b2 * *v + (T::one() - b2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *x -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        });
        if failure.is_none() && index != self.moments.len() {
            failure = Some(format!(
                "optimizer holds {} states, model has {index} parameters",
                self.moments.len()
            ));
        }
        match failure {
            Some(msg) => Err(Error::InvalidArgument(msg)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct One(Parameter<f64>);

    impl Module<f64> for One {
        fn visit(&self, f: &mut dyn FnMut(&Parameter<f64>)) {
            f(&self.0)
        }
        fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Parameter<f64>)) {
            f(&mut self.0)
        }
    }

    fn model(value: f64, grad: f64) -> One {
        let mut p = Parameter::new("p", Tensor::full(&[3], value).unwrap());
        p.grad = Tensor::full(&[3], grad).unwrap();
        One(p)
    }

    #[test]
    fn zero_gradient_leaves_parameter_unchanged() {
        let mut m = model(1.5, 0.0);
        let mut opt = AdamState::new(AdamConfig::default(), &m);
        opt.step(&mut m).unwrap();
        assert!(m.0.value.data().iter().all(|&v| v == 1.5));
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for &g in &[0.3, -2.0] {
            let mut m = model(1.0, g);
            let cfg = AdamConfig::default();
            let mut opt = AdamState::new(cfg, &m);
            opt.step(&mut m).unwrap();
            // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
            let expected = 1.0 - cfg.lr * g / (g.abs() + cfg.eps);
            for &v in m.0.value.data() {
                assert!((v - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn repeated_steps_move_monotonically() {
        let mut m = model(0.0, 1.0);
        let mut opt = AdamState::new(AdamConfig::default(), &m);
        opt.step(&mut m).unwrap();
        let after_one = m.0.value.data()[0];
        opt.step(&mut m).unwrap();
        let after_two = m.0.value.data()[0];
        assert!(after_one < 0.0 && after_two < after_one);
        // constant gradient keeps m_hat / sqrt(v_hat) = 1
        assert!((after_two + 2.0 * 2e-4).abs() < 1e-10);
    }
}
