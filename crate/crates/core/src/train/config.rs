//! Training configuration and its `key=value` text form, shared by the
//! checkpoint manifest, config files and the run record.

use std::path::PathBuf;

use crate::data::{DEFAULT_BATCH_SIZE, DEFAULT_MAX_SIZE};
use crate::error::{Error, Result};
use crate::models::{DiscriminatorConfig, GeneratorConfig};
use crate::nn::AdamConfig;
use crate::resize::ResizeMode;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Longest side after capping.
    pub max_size: u32,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Save every this many epochs; the last epoch is always saved. 0 saves
    /// only at the end.
    pub checkpoint_every: usize,
    /// Where the loss log and checkpoints go. `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 180,
            batch_size: DEFAULT_BATCH_SIZE,
            max_size: DEFAULT_MAX_SIZE,
            generator: GeneratorConfig::default(),
            discriminator: DiscriminatorConfig::default(),
            adam: AdamConfig::default(),
            seed: 0,
            checkpoint_every: 10,
            out_dir: None,
        }
    }
}

pub fn format_size((h, w): (usize, usize)) -> String {
    format!("{h}x{w}")
}

/// Parses `HxW`.
pub fn parse_size(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("size `{s}` is not of the form HxW"));
    let (h, w) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    if h == 0 || w == 0 {
        return Err(bad());
    }
    Ok((h, w))
}

fn parse_list(key: &str, s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{key}: `{s}` is not a comma-separated list of integers")))
        })
        .collect()
}

fn join(list: &[usize]) -> String {
    list.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_num<T: std::str::FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse `{s}`")))
}

pub fn resize_mode_name(mode: ResizeMode) -> &'static str {
    match mode {
        ResizeMode::Bilinear => "bilinear",
        ResizeMode::Nearest => "nearest",
    }
}

pub fn parse_resize_mode(s: &str) -> Result<ResizeMode> {
    match s.trim() {
        "bilinear" => Ok(ResizeMode::Bilinear),
        "nearest" => Ok(ResizeMode::Nearest),
        other => Err(Error::InvalidArgument(format!("unknown resize mode `{other}`"))),
    }
}

impl TrainConfig {
    pub const KEYS: [&'static str; 16] = [
        "epochs",
        "batch_size",
        "max_size",
        "seed",
        "checkpoint_every",
        "z_dim",
        "base",
        "gen_channels",
        "output_channels",
        "resize_mode",
        "disc_channels",
        "disc_min_input",
        "lr",
        "beta1",
        "beta2",
        "eps",
    ];

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        let (bh, bw) = self.generator.base;
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("epochs and batch_size must be at least 1".into()));
        }
        if (self.max_size as usize) < bh.max(bw) {
            return Err(Error::InvalidArgument(format!(
                "max_size {} is below the generator base {bh}x{bw}",
                self.max_size
            )));
        }
        if self.generator.output_channels != self.discriminator.input_channels {
            return Err(Error::InvalidArgument(format!(
                "generator emits {} channels but the discriminator expects {}",
                self.generator.output_channels, self.discriminator.input_channels
            )));
        }
        Ok(())
    }

    /// Every setting except `out_dir`, in `KEYS` order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let g = &self.generator;
        let d = &self.discriminator;
        let values = [
            self.epochs.to_string(),
            self.batch_size.to_string(),
            self.max_size.to_string(),
            self.seed.to_string(),
            self.checkpoint_every.to_string(),
            g.z_dim.to_string(),
            format_size(g.base),
            join(&g.stage_channels),
            g.output_channels.to_string(),
            resize_mode_name(g.resize_mode).to_string(),
            join(&d.conv_channels),
            format_size(d.min_input),
            format!("{:e}", self.adam.lr),
            self.adam.beta1.to_string(),
            self.adam.beta2.to_string(),
            format!("{:e}", self.adam.eps),
        ];
        Self::KEYS.into_iter().zip(values).collect()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "epochs" => self.epochs = parse_num(key, v)?,
            "batch_size" => self.batch_size = parse_num(key, v)?,
            "max_size" => self.max_size = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse_num(key, v)?,
            "z_dim" => self.generator.z_dim = parse_num(key, v)?,
            "base" => self.generator.base = parse_size(v)?,
            "gen_channels" => self.generator.stage_channels = parse_list(key, v)?,
            "output_channels" => {
                self.generator.output_channels = parse_num(key, v)?;
                self.discriminator.input_channels = self.generator.output_channels;
            }
            "resize_mode" => self.generator.resize_mode = parse_resize_mode(v)?,
            "disc_channels" => self.discriminator.conv_channels = parse_list(key, v)?,
            "disc_min_input" => self.discriminator.min_input = parse_size(v)?,
            "lr" => self.adam.lr = parse_num(key, v)?,
            "beta1" => self.adam.beta1 = parse_num(key, v)?,
            "beta2" => self.adam.beta2 = parse_num(key, v)?,
            "eps" => self.adam.eps = parse_num(key, v)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(v)),
            other => return Err(Error::InvalidArgument(format!("unknown training setting `{other}`"))),
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s: String = self.to_pairs().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        if let Some(dir) = &self.out_dir {
            s.push_str(&format!("out_dir={}\n", dir.display()));
        }
        s
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and `#`
    /// comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got `{line}`")))?;
            self.set(k, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip() {
        let mut cfg = TrainConfig {
            epochs: 5,
            seed: 99,
            out_dir: Some("runs/a".into()),
            ..TrainConfig::default()
        };
        cfg.generator.stage_channels = vec![9, 8, 7, 6, 5];
        cfg.generator.resize_mode = ResizeMode::Nearest;
        cfg.adam.lr = 1.5e-4;
        let mut back = TrainConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn sizes() {
        assert_eq!(parse_size("84x128").unwrap(), (84, 128));
        assert!(parse_size("84*128").is_err());
        assert!(parse_size("0x5").is_err());
    }

    #[test]
    fn validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::default();
        assert!(cfg.set("nonsense", "1").is_err());
        cfg.max_size = 3;
        assert!(cfg.validate().is_err());
    }
}
