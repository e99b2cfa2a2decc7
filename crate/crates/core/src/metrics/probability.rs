//! Class-probability sources standing in for the Inception network.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::inception::validate_distributions;
use crate::data::io::{load_rgb, rgb_to_tensor};
use crate::data::{ToyManifest, TOY_CLASSES};
use crate::error::{Error, Result};
use crate::models::Classifier;
use crate::nn::{softmax, softmax_cross_entropy, AdamConfig, AdamState, Module};
use crate::tensor::Tensor;

pub trait ProbabilitySource {
    fn classes(&self) -> usize;
    /// Maps `B x 3 x H x W` images in `[-1, 1]` to `B x C` class rows.
    fn probabilities(&self, images: &Tensor<f32>) -> Result<Tensor<f64>>;
}

/// Stacks the class rows of every image, rejecting non-finite or
/// non-normalized output. Images may all differ in size.
pub fn probability_source(images: &[Tensor<f32>], source: &dyn ProbabilitySource) -> Result<Tensor<f64>> {
    let c = source.classes();
    let mut rows = Vec::new();
    for img in images {
        let p = source.probabilities(img)?;
        if !p.all_finite() {
            return Err(Error::NonFinite("classifier output".into()));
        }
        rows.extend_from_slice(p.data());
    }
    let probs = Tensor::new(vec![rows.len() / c.max(1), c], rows)?;
    validate_distributions(&probs)?;
    Ok(probs)
}

/// Always answers the uniform distribution.
#[derive(Debug, Clone, Copy)]
pub struct UniformClassifier {
    pub classes: usize,
}

impl ProbabilitySource for UniformClassifier {
    fn classes(&self) -> usize {
        self.classes
    }

    fn probabilities(&self, images: &Tensor<f32>) -> Result<Tensor<f64>> {
        let (b, _, _, _) = images.dims4()?;
        Tensor::full(&[b, self.classes], 1.0 / self.classes as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyClassifierConfig {
    pub widths: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Trailing share of the corpus kept out of training.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for ToyClassifierConfig {
    fn default() -> Self {
        ToyClassifierConfig {
            widths: vec![8, 16, 16],
            epochs: 3,
            learning_rate: 2e-3,
            holdout_fraction: 0.2,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyClassifierReport {
    pub train_count: usize,
    pub heldout_count: usize,
    pub train_accuracy: f64,
    pub heldout_accuracy: f64,
}

/// GAP classifier for the ellipse colour classes of the toy corpus.
#[derive(Debug, Clone)]
pub struct ToyClassifier {
    net: Classifier<f32>,
}

impl ToyClassifier {
    pub fn untrained(config: &ToyClassifierConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(ToyClassifier {
            net: Classifier::new(3, &config.widths, TOY_CLASSES, &mut rng)?,
        })
    }

    /// Trains one image at a time on the leading part of the corpus in
    /// `dir` and scores both parts.
    pub fn train(dir: &Path, config: &ToyClassifierConfig) -> Result<(Self, ToyClassifierReport)> {
        let manifest = ToyManifest::read(dir)?;
        let mut samples = Vec::with_capacity(manifest.entries.len());
        for e in &manifest.entries {
            samples.push((rgb_to_tensor::<f32>(&load_rgb(&dir.join(&e.file))?), e.class));
        }
        if samples.len() < 2 {
            return Err(Error::EmptyDataset(dir.to_path_buf()));
        }
        let heldout = ((samples.len() as f64 * config.holdout_fraction).round() as usize).clamp(1, samples.len() - 1);
        let split = samples.len() - heldout;
        let mut me = Self::untrained(config)?;
        let mut adam = AdamState::new(
            AdamConfig {
                lr: config.learning_rate,
                beta1: 0.9,
                ..AdamConfig::default()
            },
            &me.net,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed);
        let mut order: Vec<usize> = (0..split).collect();
        for _ in 0..config.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let (img, label) = &samples[i];
                me.net.zero_grad();
                let (logits, cache) = me.net.forward(img)?;
                let (_, grad) = softmax_cross_entropy(&logits, &[*label])?;
                me.net.backward(&cache, &grad)?;
                adam.step(&mut me.net)?;
            }
        }
        let accuracy = |range: &[(Tensor<f32>, usize)]| -> Result<f64> {
            let mut hits = 0;
            for (img, label) in range {
                hits += (me.predict(img)? == *label) as usize;
            }
            Ok(hits as f64 / range.len() as f64)
        };
        let report = ToyClassifierReport {
            train_count: split,
            heldout_count: heldout,
            train_accuracy: accuracy(&samples[..split])?,
            heldout_accuracy: accuracy(&samples[split..])?,
        };
        Ok((me, report))
    }

    /// Most likely class of the first image in the batch.
    pub fn predict(&self, image: &Tensor<f32>) -> Result<usize> {
        let p = self.probabilities(image)?;
        let row = &p.data()[..TOY_CLASSES];
        Ok((0..TOY_CLASSES)
            .max_by(|&a, &b| row[a].total_cmp(&row[b]))
            .expect("at least one class"))
    }
}

impl ProbabilitySource for ToyClassifier {
    fn classes(&self) -> usize {
        self.net.classes()
    }

    fn probabilities(&self, images: &Tensor<f32>) -> Result<Tensor<f64>> {
        let (logits, _) = self.net.forward(images)?;
        softmax(&logits.cast::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_rows() {
        let imgs = vec![Tensor::<f32>::zeros(&[2, 3, 5, 7]).unwrap(), Tensor::zeros(&[1, 3, 9, 4]).unwrap()];
        let p = probability_source(&imgs, &UniformClassifier { classes: 4 }).unwrap();
        assert_eq!(p.shape(), &[3, 4]);
        assert!(p.data().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn untrained_classifier_gives_valid_rows_at_any_size() {
        let c = ToyClassifier::untrained(&ToyClassifierConfig::default()).unwrap();
        let imgs = vec![Tensor::<f32>::full(&[1, 3, 17, 33], 0.3).unwrap(), Tensor::full(&[1, 3, 40, 8], -0.2).unwrap()];
        let p = probability_source(&imgs, &c).unwrap();
        assert_eq!(p.shape(), &[2, TOY_CLASSES]);
    }
}
