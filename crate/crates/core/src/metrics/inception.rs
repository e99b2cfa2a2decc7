//! Inception score over a matrix of per-image class distributions.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DEFAULT_SPLITS: usize = 10;
/// Allowed deviation of a row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreResult {
    pub mean: f64,
    /// Population standard deviation over splits.
    pub sd: f64,
    pub splits: usize,
    pub samples: usize,
}

/// Checks that `probs` is an `N x C` matrix of finite, non-negative rows
/// summing to one.
pub fn validate_distributions(probs: &Tensor<f64>) -> Result<(usize, usize)> {
    let (n, c) = probs
        .dims2()
        .map_err(|_| Error::InvalidDistribution(format!("expected an N x C matrix, got {:?}", probs.shape())))?;
    for (i, row) in probs.data().chunks(c).enumerate() {
        if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDistribution(format!("row {i} has entry {v}")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("row {i} sums to {s}")));
        }
    }
    Ok((n, c))
}

fn split_score(rows: &[f64], classes: usize) -> f64 {
    let n = rows.len() / classes;
    let mut marginal = vec![0.0; classes];
    for row in rows.chunks(classes) {
        for (m, p) in marginal.iter_mut().zip(row) {
            *m += p;
        }
    }
    for m in &mut marginal {
        *m /= n as f64;
    }
    let kl_sum: f64 = rows
        .chunks(classes)
        .map(|row| {
            row.iter()
                .zip(&marginal)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, m)| p * (p.ln() - m.ln()))
                .sum::<f64>()
        })
        .sum();
    // Rounding can push the mean KL a hair outside [0, ln C].
    let kl = (kl_sum / n as f64).clamp(0.0, (classes as f64).ln());
    kl.exp()
}

/// `exp(E_x KL(p(y|x) || p(y)))` per split, reported as mean and population
/// SD over `splits` contiguous, near-equal chunks of the rows.
pub fn inception_score(probs: &Tensor<f64>, splits: usize) -> Result<ScoreResult> {
    let (n, c) = validate_distributions(probs)?;
    if splits == 0 || n < splits {
        return Err(Error::InvalidArgument(format!(
            "need at least {splits} samples for {splits} splits, got {n}"
        )));
    }
    let data = probs.data();
    let scores: Vec<f64> = (0..splits)
        .map(|k| {
            let (lo, hi) = (k * n / splits, (k + 1) * n / splits);
            split_score(&data[lo * c..hi * c], c)
        })
        .collect();
    let mean = scores.iter().sum::<f64>() / splits as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / splits as f64;
    Ok(ScoreResult {
        mean,
        sd: var.sqrt(),
        splits,
        samples: n,
    })
}
