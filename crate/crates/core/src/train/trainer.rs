use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::checkpoint::save_checkpoint;
use super::config::TrainConfig;
use crate::data::{next_batch, BatchPlan, ResolutionGroup};
use crate::error::{Error, Result};
use crate::models::{Discriminator, Generator};
use crate::nn::{bce_loss, bce_loss_backward, AdamState, Module};
use crate::tensor::Tensor;

pub const LOSS_LOG: &str = "losses.csv";
pub const LOSS_LOG_HEADER: &str = "step,epoch,h,w,d_loss,g_loss";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// One row of the loss log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub step: u64,
    pub epoch: usize,
    pub height: usize,
    pub width: usize,
    pub d_loss: f32,
    pub g_loss: f32,
}

impl LossRecord {
    /// Losses are written in shortest round-trip form, so equal logs mean
    /// bitwise-equal losses.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.step, self.epoch, self.height, self.width, self.d_loss, self.g_loss
        )
    }
}

/// Directory name of the checkpoint written after `epoch`.
pub fn checkpoint_name(epoch: usize) -> String {
    format!("epoch-{epoch:04}")
}

/// Generator, discriminator, their optimizers and the latent RNG, plus
/// progress counters. Everything needed to continue a run bit for bit.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub(crate) config: TrainConfig,
    pub(crate) generator: Generator<f32>,
    pub(crate) discriminator: Discriminator<f32>,
    pub(crate) g_adam: AdamState<f32>,
    pub(crate) d_adam: AdamState<f32>,
    pub(crate) rng: ChaCha8Rng,
    /// Completed optimizer steps.
    pub(crate) step: u64,
    /// Completed epochs.
    pub(crate) epoch: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let generator = Generator::new(config.generator.clone(), &mut rng)?;
        let discriminator = Discriminator::new(config.discriminator.clone(), &mut rng)?;
        let g_adam = AdamState::new(config.adam, &generator);
        let d_adam = AdamState::new(config.adam, &discriminator);
        Ok(Trainer {
            config,
            generator,
            discriminator,
            g_adam,
            d_adam,
            rng,
            step: 0,
            epoch: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn generator(&self) -> &Generator<f32> {
        &self.generator
    }

    pub fn discriminator(&self) -> &Discriminator<f32> {
        &self.discriminator
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn set_out_dir(&mut self, dir: Option<PathBuf>) {
        self.config.out_dir = dir;
    }

    /// Extends the run to `epochs` in total, e.g. after resuming.
    pub fn set_epochs(&mut self, epochs: usize) -> Result<()> {
        if epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        self.config.epochs = epochs;
        Ok(())
    }

    pub fn set_checkpoint_every(&mut self, every: usize) -> Result<()> {
        if every == 0 {
            return Err(Error::InvalidArgument("checkpoint interval must be at least 1".into()));
        }
        self.config.checkpoint_every = every;
        Ok(())
    }

    /// One discriminator update then one generator update against the real
    /// batch. Fakes are generated at the real batch's size from fresh latents.
    pub fn train_step(&mut self, real: &Tensor<f32>) -> Result<(f32, f32)> {
        let (batch, _, height, width) = real.dims4()?;
        let ones = Tensor::full(&[batch, 1], 1.0f32)?;
        let zeros = Tensor::full(&[batch, 1], 0.0f32)?;

        self.discriminator.zero_grad();
        let z = self.generator.sample_latent(batch, &mut self.rng)?;
        let fake = self.generator.generate(&z, (height, width))?;
        check_fake_size(&fake, real)?;
        let (p_real, cache) = self.discriminator.forward(real)?;
        let loss_real = bce_loss(&p_real, &ones)?;
        self.discriminator.backward(&cache, &bce_loss_backward(&p_real, &ones)?)?;
        let (p_fake, cache) = self.discriminator.forward(&fake)?;
        let loss_fake = bce_loss(&p_fake, &zeros)?;
        self.discriminator.backward(&cache, &bce_loss_backward(&p_fake, &zeros)?)?;
        let d_loss = loss_real + loss_fake;
        if !d_loss.is_finite() {
            return Err(self.non_finite(height, width, d_loss, f32::NAN));
        }
        self.d_adam.step(&mut self.discriminator)?;

        let z = self.generator.sample_latent(batch, &mut self.rng)?;
        let g_loss = self.generator_update(&z, (height, width), Some(real))?;
        if !g_loss.is_finite() {
            return Err(self.non_finite(height, width, d_loss, g_loss));
        }
        self.step += 1;
        Ok((d_loss, g_loss))
    }

    /// Generator-only update from the given latents, leaving the
    /// discriminator untouched. Returns the generator loss before the update.
    pub fn generator_step(&mut self, z: &Tensor<f32>, size: (usize, usize)) -> Result<f32> {
        self.generator_update(z, size, None)
    }

    fn generator_update(&mut self, z: &Tensor<f32>, size: (usize, usize), real: Option<&Tensor<f32>>) -> Result<f32> {
        self.generator.zero_grad();
        let (fake, g_cache) = self.generator.forward(z, size)?;
        if let Some(real) = real {
            check_fake_size(&fake, real)?;
        }
        let ones = Tensor::full(&[fake.shape()[0], 1], 1.0f32)?;
        let (p, d_cache) = self.discriminator.forward(&fake)?;
        let g_loss = bce_loss(&p, &ones)?;
        // Discriminator grads picked up here are cleared before its next update.
        let grad_image = self.discriminator.backward(&d_cache, &bce_loss_backward(&p, &ones)?)?;
        self.generator.backward(&g_cache, &grad_image)?;
        if g_loss.is_finite() {
            self.g_adam.step(&mut self.generator)?;
        }
        Ok(g_loss)
    }

    fn non_finite(&self, height: usize, width: usize, d_loss: f32, g_loss: f32) -> Error {
        log::error!(
            "non-finite loss at step {} (epoch {}, batch {height}x{width}): d_loss={d_loss} g_loss={g_loss}",
            self.step,
            self.epoch
        );
        Error::NonFiniteLoss {
            step: self.step,
            height,
            width,
            d_loss: d_loss as f64,
            g_loss: g_loss as f64,
        }
    }

    /// Runs one full epoch over `groups` in round-robin order.
    pub fn train_epoch(&mut self, groups: &[ResolutionGroup]) -> Result<Vec<LossRecord>> {
        let mut plan = BatchPlan::new(groups, self.config.batch_size)?;
        let mut records = Vec::with_capacity(plan.len());
        let epoch = self.epoch + 1;
        while let Some(batch) = next_batch::<f32>(&mut plan, groups)? {
            let (height, width) = batch.size();
            let (d_loss, g_loss) = self.train_step(&batch.images)?;
            records.push(LossRecord {
                step: self.step,
                epoch,
                height,
                width,
                d_loss,
                g_loss,
            });
        }
        self.epoch = epoch;
        Ok(records)
    }

    /// Trains from the current epoch up to `until_epoch` (default: the
    /// configured total). With an output directory, appends to the loss log
    /// and writes checkpoints on the configured interval and at the end.
    pub fn train(&mut self, groups: &[ResolutionGroup], until_epoch: Option<usize>) -> Result<Vec<LossRecord>> {
        let until = until_epoch.unwrap_or(self.config.epochs).min(self.config.epochs);
        let mut log = match &self.config.out_dir {
            Some(dir) => Some(open_loss_log(dir)?),
            None => None,
        };
        let mut all = Vec::new();
        while self.epoch < until {
            let records = self.train_epoch(groups)?;
            let last = records.last().copied();
            if let (Some((path, w)), Some(last)) = (&mut log, last) {
                for r in &records {
                    writeln!(w, "{}", r.csv_row()).map_err(|e| Error::io(path.as_path(), e))?;
                }
                w.flush().map_err(|e| Error::io(path.as_path(), e))?;
                log::info!(
                    "epoch {} done at step {}: d_loss={:.4} g_loss={:.4}",
                    self.epoch,
                    self.step,
                    last.d_loss,
                    last.g_loss
                );
            }
            all.extend(records);
            if let Some(dir) = self.config.out_dir.clone() {
                let every = self.config.checkpoint_every;
                let due = (every > 0 && self.epoch % every == 0) || self.epoch == self.config.epochs || self.epoch == until;
                if due {
                    save_checkpoint(self, &dir.join(CHECKPOINT_DIR).join(checkpoint_name(self.epoch)))?;
                }
            }
        }
        Ok(all)
    }
}

fn check_fake_size(fake: &Tensor<f32>, real: &Tensor<f32>) -> Result<()> {
    if fake.shape() != real.shape() {
        return Err(Error::Shape(format!(
            "fake batch {:?} does not match real batch {:?}",
            fake.shape(),
            real.shape()
        )));
    }
    Ok(())
}

fn open_loss_log(dir: &Path) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(LOSS_LOG);
    let fresh = !path.exists();
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    if fresh {
        writeln!(w, "{LOSS_LOG_HEADER}").map_err(|e| Error::io(&path, e))?;
    }
    Ok((path, w))
}

/// Parses a loss log written by `Trainer::train`.
pub fn read_loss_log(path: &Path) -> Result<Vec<LossRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |n: usize| Error::InvalidArgument(format!("{}: bad loss log line {}", path.display(), n + 1));
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(n));
            }
            Ok(LossRecord {
                step: f[0].parse().map_err(|_| bad(n))?,
                epoch: f[1].parse().map_err(|_| bad(n))?,
                height: f[2].parse().map_err(|_| bad(n))?,
                width: f[3].parse().map_err(|_| bad(n))?,
                d_loss: f[4].parse().map_err(|_| bad(n))?,
                g_loss: f[5].parse().map_err(|_| bad(n))?,
            })
        })
        .collect()
}
