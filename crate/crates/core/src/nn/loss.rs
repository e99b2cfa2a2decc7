use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Predictions are clamped to `[BCE_EPSILON, 1 - BCE_EPSILON]` before the log.
pub const BCE_EPSILON: f64 = 1e-7;

fn clamp_bounds<T: Scalar>() -> (T, T) {
    (T::lit(BCE_EPSILON), T::lit(1.0 - BCE_EPSILON))
}

/// Mean binary cross-entropy of probabilities `pred` against `target`.
pub fn bce_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<T> {
    pred.expect_same_shape(target)?;
    let (lo, hi) = clamp_bounds::<T>();
    let total: T = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let p = p.max(lo).min(hi);
            -(t * p.ln() + (T::one() - t) * (T::one() - p).ln())
        })
        .sum();
    Ok(total / T::lit(pred.len() as f64))
}

/// Gradient of [`bce_loss`] with respect to `pred`. Zero where the clamp is active.
pub fn bce_loss_backward<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<Tensor<T>> {
    pred.expect_same_shape(target)?;
    let (lo, hi) = clamp_bounds::<T>();
    let n = T::lit(pred.len() as f64);
    pred.zip_map(target, |p, t| {
        if p < lo || p > hi {
            T::zero()
        } else {
            (p - t) / (p * (T::one() - p)) / n
        }
    })
}

/// Row-wise softmax of a `B x C` tensor.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let (_, c) = logits.dims2()?;
    let mut out = logits.clone();
    for row in out.data_mut().chunks_mut(c) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut total = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v = *v / total;
        }
    }
    Ok(out)
}

/// Mean cross-entropy of softmax(logits) against integer labels, with its
/// gradient with respect to the logits.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let (b, c) = logits.dims2()?;
    if labels.len() != b {
        return Err(Error::Shape(format!("{} labels for batch of {b}", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range for {c} classes")));
    }
    let mut grad = softmax(logits)?;
    let n = T::lit(b as f64);
    let mut loss = T::zero();
    for (row, &label) in grad.data_mut().chunks_mut(c).zip(labels) {
        loss -= row[label].max(T::lit(1e-30)).ln();
        row[label] -= T::one();
        for v in row.iter_mut() {
            *v = *v / n;
        }
    }
    Ok((loss / n, grad))
}
