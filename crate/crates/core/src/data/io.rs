//! Image decoding and conversion between 8-bit RGB and `[-1, 1]` tensors.

use std::path::Path;

use image::RgbImage;

use super::census::ImageRecord;
use crate::error::{Error, Result};
use crate::resize::resize_bilinear;
use crate::tensor::{Scalar, Tensor};

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path).map_err(|e| Error::image(path, e))?.to_rgb8())
}

pub fn save_png(image: &RgbImage, path: &Path) -> Result<()> {
    image
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::image(path, e))
}

/// `1 x 3 x H x W` tensor with `v / 127.5 - 1`.
pub fn rgb_to_tensor<T: Scalar>(image: &RgbImage) -> Tensor<T> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let raw = image.as_raw();
    let mut data = vec![T::zero(); 3 * h * w];
    for c in 0..3 {
        for i in 0..h * w {
            data[c * h * w + i] = T::lit(raw[i * 3 + c] as f64 / 127.5 - 1.0);
        }
    }
    Tensor::new(vec![1, 3, h, w], data).expect("image dims are positive")
}

/// Converts batch item `index` of a `B x 3 x H x W` tensor in `[-1, 1]` to RGB.
pub fn tensor_to_rgb<T: Scalar>(images: &Tensor<T>, index: usize) -> Result<RgbImage> {
    let (b, c, h, w) = images.dims4()?;
    if c != 3 || index >= b {
        return Err(Error::Shape(format!(
            "cannot take RGB item {index} of {:?}",
            images.shape()
        )));
    }
    let item = &images.data()[index * 3 * h * w..(index + 1) * 3 * h * w];
    let mut raw = vec![0u8; 3 * h * w];
    for ch in 0..3 {
        for i in 0..h * w {
            let v = item[ch * h * w + i].to_f64().clamp(-1.0, 1.0);
            raw[i * 3 + ch] = ((v + 1.0) * 127.5).round() as u8;
        }
    }
    Ok(RgbImage::from_raw(w as u32, h as u32, raw).expect("buffer sized to dims"))
}

/// Decodes one record and, if its native size differs from the group size,
/// resamples it bilinearly to `(width, height)`.
pub fn load_group_image<T: Scalar>(record: &ImageRecord, size: (u32, u32)) -> Result<Tensor<T>> {
    let img = load_rgb(&record.path)?;
    let t = rgb_to_tensor(&img);
    if (img.width(), img.height()) == size {
        Ok(t)
    } else {
        resize_bilinear(&t, size.1 as usize, size.0 as usize)
    }
}
