//! PNG image I/O.
//!
//! Images load as floating-point intensities on the 0..255 scale
//! regardless of bit depth (16-bit samples are rescaled), and save by
//! clamping to [0, 255] and rounding. Grayscale maps to one channel, RGB
//! to three; alpha is not supported.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::field::{Field, RasterImage};

pub fn load_png(path: &Path) -> Result<RasterImage> {
    let img = image::open(path).map_err(|e| Error::UnsupportedImage(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if h < 3 || w < 3 {
        return Err(Error::GridTooSmall {
            height: h,
            width: w,
        });
    }
    let field = match img {
        DynamicImage::ImageLuma8(buf) => {
            Field::from_fn(h, w, 1, |_, i, j| buf.get_pixel(j as u32, i as u32)[0] as f64)
        }
        DynamicImage::ImageLuma16(buf) => Field::from_fn(h, w, 1, |_, i, j| {
            buf.get_pixel(j as u32, i as u32)[0] as f64 * 255.0 / 65535.0
        }),
        DynamicImage::ImageRgb8(buf) => Field::from_fn(h, w, 3, |c, i, j| {
            buf.get_pixel(j as u32, i as u32)[c] as f64
        }),
        DynamicImage::ImageRgb16(buf) => Field::from_fn(h, w, 3, |c, i, j| {
            buf.get_pixel(j as u32, i as u32)[c] as f64 * 255.0 / 65535.0
        }),
        other => {
            // Alpha or exotic layouts: flatten to RGB8 as a convenience.
            let buf = other.to_rgb8();
            Field::from_fn(h, w, 3, |c, i, j| buf.get_pixel(j as u32, i as u32)[c] as f64)
        }
    };
    Ok(field)
}

/// Saves as 8-bit PNG (grayscale for one channel, RGB for three).
pub fn save_png(path: &Path, image: &RasterImage) -> Result<()> {
    let (h, w, c) = image.dims();
    let quantize = |v: f64| v.clamp(0.0, 255.0).round() as u8;
    match c {
        1 => {
            let buf = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
                Luma([quantize(image.get(0, y as usize, x as usize))])
            });
            buf.save(path)
                .map_err(|e| Error::UnsupportedImage(e.to_string()))
        }
        3 => {
            let buf = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
                Rgb([
                    quantize(image.get(0, y as usize, x as usize)),
                    quantize(image.get(1, y as usize, x as usize)),
                    quantize(image.get(2, y as usize, x as usize)),
                ])
            });
            buf.save(path)
                .map_err(|e| Error::UnsupportedImage(e.to_string()))
        }
        other => Err(Error::UnsupportedImage(format!(
            "can only save 1- or 3-channel images, got {other}"
        ))),
    }
}

/// Saves as 16-bit PNG, rescaling the 0..255 range to 0..65535.
pub fn save_png16(path: &Path, image: &RasterImage) -> Result<()> {
    let (h, w, c) = image.dims();
    let quantize = |v: f64| (v.clamp(0.0, 255.0) * 65535.0 / 255.0).round() as u16;
    match c {
        1 => {
            let buf = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
                Luma([quantize(image.get(0, y as usize, x as usize))])
            });
            buf.save(path)
                .map_err(|e| Error::UnsupportedImage(e.to_string()))
        }
        3 => {
            let buf = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
                Rgb([
                    quantize(image.get(0, y as usize, x as usize)),
                    quantize(image.get(1, y as usize, x as usize)),
                    quantize(image.get(2, y as usize, x as usize)),
                ])
            });
            buf.save(path)
                .map_err(|e| Error::UnsupportedImage(e.to_string()))
        }
        other => Err(Error::UnsupportedImage(format!(
            "can only save 1- or 3-channel images, got {other}"
        ))),
    }
}

/// PNG files in a directory, sorted by name for reproducibility.
pub fn list_images(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        })
        .collect();
    paths.sort();
    Ok(paths)
}
