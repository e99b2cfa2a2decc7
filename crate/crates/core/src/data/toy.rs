//! Synthetic corpus of smooth backgrounds with one anti-aliased ellipse
//! each, at mixed sizes and aspect ratios. The ellipse colour family is the
//! class label used by the toy classifier.

use std::fmt::Write as _;
use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::io::save_png;
use crate::error::{Error, Result};

pub const TOY_MANIFEST: &str = "manifest.csv";
pub const TOY_CLASSES: usize = 4;

const PALETTE: [[f64; 3]; TOY_CLASSES] = [
    [120.0, 72.0, 40.0],
    [170.0, 40.0, 50.0],
    [70.0, 80.0, 130.0],
    [35.0, 30.0, 30.0],
];

const SUBSAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub count: usize,
    pub min_size: u32,
    pub max_size: u32,
    /// Width and height are drawn from `min_size, min_size + step, ..`.
    pub size_step: u32,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            count: 100,
            min_size: 32,
            max_size: 64,
            size_step: 8,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyEntry {
    pub file: String,
    pub width: u32,
    pub height: u32,
    pub class: usize,
    pub center_x: f64,
    pub center_y: f64,
    pub semi_major: f64,
    pub semi_minor: f64,
    pub angle: f64,
    pub color: [u8; 3],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ToyManifest {
    pub entries: Vec<ToyEntry>,
}

const HEADER: &str = "file,width,height,class,center_x,center_y,semi_major,semi_minor,angle,red,green,blue";

impl ToyManifest {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{HEADER}\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{},{},{}",
                e.file,
                e.width,
                e.height,
                e.class,
                e.center_x,
                e.center_y,
                e.semi_major,
                e.semi_minor,
                e.angle,
                e.color[0],
                e.color[1],
                e.color[2]
            );
        }
        out
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(TOY_MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let bad = |line: usize, msg: &str| {
            Error::InvalidArgument(format!("{}:{}: {msg}", path.display(), line + 1))
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == HEADER => {}
            _ => return Err(bad(0, "unexpected manifest header")),
        }
        let mut entries = Vec::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 12 {
                return Err(bad(n, "expected 12 fields"));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(n, "bad number"));
            let int = |i: usize| f[i].parse::<u32>().map_err(|_| bad(n, "bad integer"));
            entries.push(ToyEntry {
                file: f[0].to_string(),
                width: int(1)?,
                height: int(2)?,
                class: int(3)? as usize,
                center_x: num(4)?,
                center_y: num(5)?,
                semi_major: num(6)?,
                semi_minor: num(7)?,
                angle: num(8)?,
                color: [int(9)? as u8, int(10)? as u8, int(11)? as u8],
            });
        }
        Ok(ToyManifest { entries })
    }
}

fn sample_side(rng: &mut ChaCha8Rng, cfg: &ToyConfig) -> u32 {
    let step = cfg.size_step.max(1);
    let choices = (cfg.max_size - cfg.min_size) / step;
    cfg.min_size + step * rng.random_range(0..=choices)
}

fn render(entry: &ToyEntry, rng: &mut ChaCha8Rng) -> RgbImage {
    let (w, h) = (entry.width, entry.height);
    let top: [f64; 3] = std::array::from_fn(|c| [228.0, 186.0, 164.0][c] + rng.random_range(-15.0..15.0));
    let bottom: [f64; 3] = std::array::from_fn(|c| top[c] + rng.random_range(-30.0..10.0));
    let tilt = rng.random_range(-0.5..0.5);
    let (sin, cos) = entry.angle.sin_cos();
    let color = entry.color.map(f64::from);
    let inside = |x: f64, y: f64| {
        let (dx, dy) = (x - entry.center_x, y - entry.center_y);
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        (u / entry.semi_major).powi(2) + (v / entry.semi_minor).powi(2) <= 1.0
    };
    RgbImage::from_fn(w, h, |px, py| {
        let t = ((py as f64 + 0.5) / h as f64 + tilt * ((px as f64 + 0.5) / w as f64 - 0.5)).clamp(0.0, 1.0);
        let mut hits = 0;
        for sy in 0..SUBSAMPLES {
            for sx in 0..SUBSAMPLES {
                let x = px as f64 + (sx as f64 + 0.5) / SUBSAMPLES as f64;
                let y = py as f64 + (sy as f64 + 0.5) / SUBSAMPLES as f64;
                hits += inside(x, y) as usize;
            }
        }
        let coverage = hits as f64 / (SUBSAMPLES * SUBSAMPLES) as f64;
        Rgb(std::array::from_fn(|c| {
            let bg = top[c] + t * (bottom[c] - top[c]);
            let v = bg + coverage * (color[c] - bg) + rng.random_range(-3.0..=3.0);
            v.round().clamp(0.0, 255.0) as u8
        }))
    })
}

/// Writes `count` PNGs plus `manifest.csv` into `dir`. The output depends
/// only on the config, byte for byte.
pub fn make_toy_dataset(dir: &Path, cfg: &ToyConfig) -> Result<ToyManifest> {
    if cfg.count == 0 || cfg.min_size == 0 || cfg.max_size < cfg.min_size {
        return Err(Error::InvalidArgument(format!(
            "toy dataset needs count >= 1 and 1 <= min_size <= max_size, got {cfg:?}"
        )));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let digits = cfg.count.to_string().len().max(5);
    let mut manifest = ToyManifest::default();
    for i in 0..cfg.count {
        let width = sample_side(&mut rng, cfg);
        let height = sample_side(&mut rng, cfg);
        let class = rng.random_range(0..TOY_CLASSES);
        let short = width.min(height) as f64;
        let semi_major = short * rng.random_range(0.2..0.38);
        let semi_minor = semi_major * rng.random_range(0.45..1.0);
        let entry = ToyEntry {
            file: format!("toy_{i:0digits$}.png"),
            width,
            height,
            class,
            center_x: width as f64 * rng.random_range(0.35..0.65),
            center_y: height as f64 * rng.random_range(0.35..0.65),
            semi_major,
            semi_minor,
            angle: rng.random_range(0.0..std::f64::consts::PI),
            color: PALETTE[class].map(|v| (v + rng.random_range(-12.0..12.0)).round().clamp(0.0, 255.0) as u8),
        };
        let image = render(&entry, &mut rng);
        save_png(&image, &dir.join(&entry.file))?;
        manifest.entries.push(entry);
    }
    let path = dir.join(TOY_MANIFEST);
    std::fs::write(&path, manifest.to_csv()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
