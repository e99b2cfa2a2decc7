use image::RgbImage;

use crate::error::{Error, Result};

pub const PEAK: f64 = 255.0;

pub(crate) fn check_same_dims(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::Shape(format!(
            "image sizes differ: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Mean squared error over every channel of every pixel.
pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    check_same_dims(a, b)?;
    let (ra, rb) = (a.as_raw(), b.as_raw());
    let sum: f64 = ra
        .iter()
        .zip(rb)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / ra.len() as f64)
}

/// `10 log10(255^2 / mse)`, or `+inf` when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// CSV form of a PSNR value; infinity is written as `inf`.
pub fn format_psnr(psnr: f64) -> String {
    if psnr.is_infinite() {
        "inf".into()
    } else {
        format!("{psnr:.6}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn identical_is_infinite() {
        let a = RgbImage::from_pixel(3, 3, Rgb([9, 8, 7]));
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(format_psnr(f64::INFINITY), "inf");
    }

    #[test]
    fn off_by_one() {
        let a = RgbImage::from_pixel(4, 2, Rgb([10, 20, 30]));
        let b = RgbImage::from_pixel(4, 2, Rgb([11, 21, 31]));
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
        assert!((psnr(&a, &b).unwrap() - 48.1308).abs() < 1e-4);
    }

    #[test]
    fn size_mismatch() {
        assert!(mse(&RgbImage::new(2, 2), &RgbImage::new(2, 3)).is_err());
    }
}
