//! Four resampling methods for the resize-distortion audit.
//!
//! All methods work on 8-bit RGB and use the half-pixel coordinate map of
//! the network's resize layer. Linear and nearest call that layer directly.

use std::fmt;
use std::str::FromStr;

use image::RgbImage;

use crate::error::{Error, Result};
use crate::resize::{resize, ResizeMode};
use crate::tensor::Tensor;

/// Catmull-Rom.
pub const CUBIC_A: f64 = -0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DownsampleMethod {
    Area,
    Cubic,
    Linear,
    Nearest,
}

impl DownsampleMethod {
    pub const ALL: [DownsampleMethod; 4] = [
        DownsampleMethod::Area,
        DownsampleMethod::Cubic,
        DownsampleMethod::Linear,
        DownsampleMethod::Nearest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DownsampleMethod::Area => "area",
            DownsampleMethod::Cubic => "cubic",
            DownsampleMethod::Linear => "linear",
            DownsampleMethod::Nearest => "nearest",
        }
    }
}

impl fmt::Display for DownsampleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DownsampleMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DownsampleMethod::ALL
            .into_iter()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown downsample method `{s}`")))
    }
}

/// Cubic convolution kernel with parameter `CUBIC_A`.
pub fn cubic_kernel(x: f64) -> f64 {
    let a = CUBIC_A;
    let x = x.abs();
    if x < 1.0 {
        ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a
    } else {
        0.0
    }
}

type Taps = Vec<Vec<(usize, f64)>>;

/// Box filter over each destination pixel's exact source footprint.
fn area_taps(src: usize, dst: usize) -> Taps {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let (lo, hi) = (d as f64 * scale, (d + 1) as f64 * scale);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                    (overlap > 0.0).then_some((s, overlap / scale))
                })
                .collect()
        })
        .collect()
}

fn cubic_taps(src: usize, dst: usize) -> Taps {
    let scale = src as f64 / dst as f64;
    let last = src as isize - 1;
    (0..dst)
        .map(|d| {
            let x = (d as f64 + 0.5) * scale - 0.5;
            let base = x.floor() as isize;
            (base - 1..=base + 2)
                .map(|s| (s.clamp(0, last) as usize, cubic_kernel(x - s as f64)))
                .collect()
        })
        .collect()
}

/// Applies row taps then column taps to an interleaved RGB buffer.
fn separable(image: &RgbImage, taps_x: &Taps, taps_y: &Taps) -> Vec<f64> {
    let (sw, sh) = (image.width() as usize, image.height() as usize);
    let (dw, dh) = (taps_x.len(), taps_y.len());
    let raw = image.as_raw();
    let mut rows = vec![0.0; sh * dw * 3];
    for y in 0..sh {
        for (x, taps) in taps_x.iter().enumerate() {
            for c in 0..3 {
                rows[(y * dw + x) * 3 + c] = taps
                    .iter()
                    .map(|&(s, w)| w * raw[(y * sw + s) * 3 + c] as f64)
                    .sum();
            }
        }
    }
    let mut out = vec![0.0; dh * dw * 3];
    for (y, taps) in taps_y.iter().enumerate() {
        for x in 0..dw {
            for c in 0..3 {
                out[(y * dw + x) * 3 + c] = taps
                    .iter()
                    .map(|&(s, w)| w * rows[(s * dw + x) * 3 + c])
                    .sum();
            }
        }
    }
    out
}

fn through_resize_layer(image: &RgbImage, width: usize, height: usize, mode: ResizeMode) -> Result<Vec<f64>> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let raw = image.as_raw();
    let planar = Tensor::<f64>::from_fn(&[1, 3, h, w], |i| {
        let (c, p) = (i / (h * w), i % (h * w));
        raw[p * 3 + c] as f64
    })?;
    let out = resize(&planar, height, width, mode)?;
    let data = out.data();
    let n = height * width;
    Ok((0..n * 3).map(|i| data[(i % 3) * n + i / 3]).collect())
}

/// Resamples `image` to `width x height` and returns interleaved RGB values
/// clamped to `[0, 255]` but not yet rounded.
pub fn downsample_values(image: &RgbImage, width: u32, height: u32, method: DownsampleMethod) -> Result<Vec<f64>> {
    let (sw, sh) = (image.width(), image.height());
    if width == 0 || height == 0 || sw == 0 || sh == 0 {
        return Err(Error::InvalidArgument(format!(
            "cannot resample {sw}x{sh} to {width}x{height}"
        )));
    }
    if width > sw || height > sh {
        return Err(Error::InvalidArgument(format!(
            "{method} resampling is defined for downsampling only: {sw}x{sh} -> {width}x{height}"
        )));
    }
    let (w, h) = (width as usize, height as usize);
    let (sw, sh) = (sw as usize, sh as usize);
    let values = match method {
        DownsampleMethod::Area => separable(image, &area_taps(sw, w), &area_taps(sh, h)),
        DownsampleMethod::Cubic => separable(image, &cubic_taps(sw, w), &cubic_taps(sh, h)),
        DownsampleMethod::Linear => through_resize_layer(image, w, h, ResizeMode::Bilinear)?,
        DownsampleMethod::Nearest => through_resize_layer(image, w, h, ResizeMode::Nearest)?,
    };
    Ok(values.into_iter().map(|v| v.clamp(0.0, 255.0)).collect())
}

pub fn downsample(image: &RgbImage, width: u32, height: u32, method: DownsampleMethod) -> Result<RgbImage> {
    let values = downsample_values(image, width, height, method)?;
    let raw = values.into_iter().map(|v| v.round() as u8).collect();
    Ok(RgbImage::from_raw(width, height, raw).expect("buffer sized to dims"))
}
