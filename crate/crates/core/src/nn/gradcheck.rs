//! Central finite-difference verification of analytic gradients.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `|a - n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub elements: usize,
}

impl GradCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }

    /// Worst of two checks.
    pub fn merge(self, other: GradCheck) -> GradCheck {
        let elements = self.elements + other.elements;
        if other.max_rel_error > self.max_rel_error {
            GradCheck { elements, ..other }
        } else {
            GradCheck { elements, ..self }
        }
    }
}

/// Compares `analytic` against central differences of the scalar `loss`
/// around `input`, one element at a time.
pub fn grad_check(
    loss: impl Fn(&Tensor<f64>) -> Result<f64>,
    input: &Tensor<f64>,
    analytic: &Tensor<f64>,
    step: f64,
) -> Result<GradCheck> {
    input.expect_same_shape(analytic)?;
    if !analytic.all_finite() {
        return Err(Error::NonFinite("analytic gradient".into()));
    }
    let mut probe = input.clone();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst_index: 0,
        elements: input.len(),
    };
    for i in 0..input.len() {
        let x = input.data()[i];
        probe.data_mut()[i] = x + step;
        let plus = loss(&probe)?;
        probe.data_mut()[i] = x - step;
        let minus = loss(&probe)?;
        probe.data_mut()[i] = x;
        let numeric = (plus - minus) / (2.0 * step);
        if !numeric.is_finite() {
            return Err(Error::NonFinite(format!("finite difference at element {i}")));
        }
        let err = relative_error(analytic.data()[i], numeric);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_gradient_of_quadratic_passes() {
        let x = Tensor::<f64>::new(vec![3], vec![0.5, -1.0, 2.0]).unwrap();
        let grad = x.scale(2.0);
        let r = grad_check(|t| Ok(t.data().iter().map(|v| v * v).sum()), &x, &grad, 1e-3).unwrap();
        assert!(r.max_rel_error < 1e-9);
    }

    #[test]
    fn wrong_gradient_is_reported() {
        let x = Tensor::<f64>::new(vec![2], vec![1.0, 1.0]).unwrap();
        let wrong = Tensor::<f64>::new(vec![2], vec![2.0, 3.0]).unwrap();
        let r = grad_check(|t| Ok(t.data().iter().map(|v| v * v).sum()), &x, &wrong, 1e-3).unwrap();
        assert_eq!(r.worst_index, 1);
        assert!(r.max_rel_error > 0.1);
    }

    #[test]
    fn non_finite_values_fail() {
        let x = Tensor::<f64>::new(vec![1], vec![1.0]).unwrap();
        let g = Tensor::<f64>::new(vec![1], vec![1.0]).unwrap();
        assert!(grad_check(|_| Ok(f64::NAN), &x, &g, 1e-3).is_err());
    }
}
