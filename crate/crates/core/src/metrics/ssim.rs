//! Structural similarity on BT.601 luma with an 11x11 Gaussian window
//! (sigma 1.5). The map covers only positions where the whole window fits.

use image::{GrayImage, Luma, RgbImage};

use super::quality::{check_same_dims, PEAK};
use crate::error::{Error, Result};

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
pub const K1: f64 = 0.01;
pub const K2: f64 = 0.03;

#[derive(Debug, Clone, PartialEq)]
pub struct SsimMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl SsimMap {
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ssim {
    /// Mean of the map.
    pub score: f64,
    pub map: SsimMap,
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_window() -> [f64; WINDOW] {
    let r = (WINDOW / 2) as f64;
    let mut w = [0.0; WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

pub fn luma(image: &RgbImage) -> Vec<f64> {
    image
        .pixels()
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect()
}

/// Valid-mode separable filter.
fn filter(plane: &[f64], w: usize, h: usize, taps: &[f64; WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w + 1 - WINDOW, h + 1 - WINDOW);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..WINDOW).map(|k| taps[k] * plane[y * w + x + k]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..WINDOW).map(|k| taps[k] * rows[(y + k) * ow + x]).sum();
        }
    }
    out
}

pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<Ssim> {
    check_same_dims(a, b)?;
    let (w, h) = (a.width() as usize, a.height() as usize);
    if w < WINDOW || h < WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs at least {WINDOW}x{WINDOW} pixels, got {w}x{h}"
        )));
    }
    let (ya, yb) = (luma(a), luma(b));
    let taps = gaussian_window();
    let product = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>();
    let mu_a = filter(&ya, w, h, &taps);
    let mu_b = filter(&yb, w, h, &taps);
    let aa = filter(&product(&ya, &ya), w, h, &taps);
    let bb = filter(&product(&yb, &yb), w, h, &taps);
    let ab = filter(&product(&ya, &yb), w, h, &taps);
    let c1 = (K1 * PEAK).powi(2);
    let c2 = (K2 * PEAK).powi(2);
    let values: Vec<f64> = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = aa[i] - ma * ma;
            let var_b = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2))
        })
        .collect();
    let score = values.iter().sum::<f64>() / values.len() as f64;
    Ok(Ssim {
        score,
        map: SsimMap {
            width: w + 1 - WINDOW,
            height: h + 1 - WINDOW,
            values,
        },
    })
}

/// Full-size map where bright pixels mark structural change:
/// `round(255 (1 - clamp(ssim, 0, 1)))`, with the valid map edge-padded
/// out to the image size.
pub fn diff_map(a: &RgbImage, b: &RgbImage) -> Result<GrayImage> {
    Ok(render_diff(&ssim(a, b)?.map, a.width(), a.height()))
}

pub fn render_diff(map: &SsimMap, width: u32, height: u32) -> GrayImage {
    let r = WINDOW / 2;
    GrayImage::from_fn(width, height, |x, y| {
        let mx = (x as usize).saturating_sub(r).min(map.width - 1);
        let my = (y as usize).saturating_sub(r).min(map.height - 1);
        let s = map.at(mx, my).clamp(0.0, 1.0);
        Luma([(PEAK * (1.0 - s)).round() as u8])
    })
}
