//! Downsamples a source image to a reference's size with every method and
//! scores each result against the reference.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::RgbImage;

use super::downsample::{downsample, DownsampleMethod};
use super::quality::{format_psnr, mse, psnr_from_mse};
use super::ssim::{render_diff, ssim};
use crate::error::{Error, Result};

pub const AUDIT_CSV: &str = "audit.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub method: DownsampleMethod,
    pub mse: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub diff_map: Option<PathBuf>,
}

impl AuditReport {
    /// Gap between the stored PSNR and the one implied by the stored MSE.
    pub fn identity_gap(&self) -> f64 {
        let implied = psnr_from_mse(self.mse);
        if implied.is_infinite() && self.psnr_db.is_infinite() {
            0.0
        } else {
            (implied - self.psnr_db).abs()
        }
    }
}

/// Scores `source` downsampled to the reference size by each method.
pub fn audit_images(reference: &RgbImage, source: &RgbImage) -> Result<Vec<(AuditReport, RgbImage)>> {
    let (w, h) = reference.dimensions();
    if source.width() < w || source.height() < h {
        return Err(Error::InvalidArgument(format!(
            "source {}x{} is smaller than reference {w}x{h}",
            source.width(),
            source.height()
        )));
    }
    DownsampleMethod::ALL
        .into_iter()
        .map(|method| {
            let out = downsample(source, w, h, method)?;
            let m = mse(reference, &out)?;
            let s = ssim(reference, &out)?;
            let report = AuditReport {
                method,
                mse: m,
                psnr_db: psnr_from_mse(m),
                ssim: s.score,
                diff_map: None,
            };
            let diff = render_diff(&s.map, w, h);
            Ok((report, image::DynamicImage::ImageLuma8(diff).to_rgb8()))
        })
        .collect()
}

pub fn audit_csv(reports: &[AuditReport]) -> String {
    let mut out = String::from("method,mse,psnr,ssim\n");
    for r in reports {
        let _ = writeln!(out, "{},{:.6},{},{:.6}", r.method, r.mse, format_psnr(r.psnr_db), r.ssim);
    }
    out
}

/// Writes `audit.csv` and one `diff_<method>.png` per method into `out_dir`.
pub fn run_audit(reference: &Path, source: &Path, out_dir: &Path) -> Result<Vec<AuditReport>> {
    let reference = crate::data::io::load_rgb(reference)?;
    let source = crate::data::io::load_rgb(source)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut reports = Vec::new();
    for (mut report, diff) in audit_images(&reference, &source)? {
        let path = out_dir.join(format!("diff_{}.png", report.method));
        crate::data::io::save_png(&diff, &path)?;
        report.diff_map = Some(path);
        reports.push(report);
    }
    let csv = out_dir.join(AUDIT_CSV);
    std::fs::write(&csv, audit_csv(&reports)).map_err(|e| Error::io(&csv, e))?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn linear_self_comparison_is_perfect() {
        let source = RgbImage::from_fn(64, 48, |x, y| Rgb([(x * 4) as u8, (y * 5) as u8, ((x * y) % 256) as u8]));
        let reference = downsample(&source, 32, 24, DownsampleMethod::Linear).unwrap();
        let rows = audit_images(&reference, &source).unwrap();
        assert_eq!(rows.len(), 4);
        let linear = &rows.iter().find(|(r, _)| r.method == DownsampleMethod::Linear).unwrap().0;
        assert_eq!(linear.mse, 0.0);
        assert!(linear.psnr_db.is_infinite());
        assert_eq!(linear.ssim, 1.0);
        for (r, diff) in &rows {
            assert!(r.identity_gap() < 1e-9);
            assert_eq!(diff.dimensions(), (32, 24));
        }
        assert!(audit_csv(&rows.into_iter().map(|r| r.0).collect::<Vec<_>>()).contains("linear,0.000000,inf,1.000000"));
    }

    #[test]
    fn undersized_source_rejected() {
        assert!(audit_images(&RgbImage::new(20, 20), &RgbImage::new(19, 40)).is_err());
    }
}
