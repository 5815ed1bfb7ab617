//! PNG and ETEN ingestion. PNG samples map to `v / 255`; writing clamps to
//! `[0, 1]` and rounds half-up back to 8 bits.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ctmg_core::eten;
use ctmg_core::{Dims3, ImageTensor};
use image::RgbImage;

pub fn load_png(path: &Path) -> Result<ImageTensor> {
    let img = image::open(path)
        .with_context(|| format!("reading {}", path.display()))?
        .to_rgb8();
    Ok(from_rgb8(&img))
}

pub fn from_rgb8(img: &RgbImage) -> ImageTensor {
    let (w, h) = img.dimensions();
    let dims = Dims3::new(h as usize, w as usize, 3);
    ImageTensor::from_fn(dims, |i, j, k| img.get_pixel(j as u32, i as u32)[k] as f64 / 255.0)
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn to_rgb8(x: &ImageTensor) -> Result<RgbImage> {
    let d = x.dims();
    if d.channels != 3 {
        bail!("PNG output needs 3 channels, got {}", d.channels);
    }
    Ok(RgbImage::from_fn(d.cols as u32, d.rows as u32, |c, r| {
        let (i, j) = (r as usize, c as usize);
        image::Rgb([quantize(x.get(i, j, 0)), quantize(x.get(i, j, 1)), quantize(x.get(i, j, 2))])
    }))
}

pub fn save_png(path: &Path, x: &ImageTensor) -> Result<()> {
    to_rgb8(x)?
        .save(path)
        .with_context(|| format!("writing {}", path.display()))
}

fn is_eten(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("eten"))
}

/// Loads `.eten` files exactly and anything else as PNG.
pub fn load_any(path: &Path) -> Result<ImageTensor> {
    if is_eten(path) {
        eten::load_image(path).with_context(|| format!("reading {}", path.display()))
    } else {
        load_png(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_rounds_half_up_and_clamps() {
        assert_eq!(quantize(-0.2), 0);
        assert_eq!(quantize(1.7), 255);
        assert_eq!(quantize(0.5 / 255.0), 1);
        assert_eq!(quantize(0.49 / 255.0), 0);
        for v in 0..=255u8 {
            assert_eq!(quantize(v as f64 / 255.0), v);
        }
    }

    #[test]
    fn rgb_round_trip() {
        let img = RgbImage::from_fn(5, 3, |x, y| image::Rgb([(x * 40) as u8, (y * 90) as u8, (x * y * 17) as u8]));
        let t = from_rgb8(&img);
        assert_eq!(t.dims(), Dims3::new(3, 5, 3));
        assert_eq!(to_rgb8(&t).unwrap(), img);
    }

    #[test]
    fn two_channel_output_rejected() {
        assert!(to_rgb8(&ImageTensor::zeros(Dims3::new(2, 2, 2))).is_err());
    }
}
