//! 8-bit PNG interchange: values map to `[0, 1]` by `/255` and back by
//! `round(v * 255)` after clamping.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage, RgbaImage};

use super::{BinaryMask, ImageBuffer, LandmarkSet};
use crate::error::{Error, Result};

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn load_png(path: &Path) -> Result<ImageBuffer> {
    if !path.exists() {
        return Err(Error::MissingFile { path: path.to_path_buf() });
    }
    let img = image::open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(g) => {
            ImageBuffer::new(w, h, 1, g.into_raw().into_iter().map(|v| f32::from(v) / 255.0).collect())
        }
        other => {
            ImageBuffer::new(w, h, 3, other.to_rgb8().into_raw().into_iter().map(|v| f32::from(v) / 255.0).collect())
        }
    }
}

pub fn save_png(img: &ImageBuffer, path: &Path) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    match img.channels() {
        1 => GrayImage::from_raw(w, h, bytes).expect("gray buffer size").save(path)?,
        _ => RgbImage::from_raw(w, h, bytes).expect("rgb buffer size").save(path)?,
    }
    Ok(())
}

/// Reads an image as an RGB buffer plus a 1-channel alpha buffer
/// (fully opaque when the file has no alpha).
pub fn load_rgba_png(path: &Path) -> Result<(ImageBuffer, ImageBuffer)> {
    if !path.exists() {
        return Err(Error::MissingFile { path: path.to_path_buf() });
    }
    let img = image::open(path)?.to_rgba8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raw = img.into_raw();
    let rgb = raw.chunks_exact(4).flat_map(|px| px[..3].iter().map(|&v| f32::from(v) / 255.0)).collect();
    let alpha = raw.chunks_exact(4).map(|px| f32::from(px[3]) / 255.0).collect();
    Ok((ImageBuffer::new(w, h, 3, rgb)?, ImageBuffer::new(w, h, 1, alpha)?))
}

pub fn save_rgba_png(rgb: &ImageBuffer, alpha: &ImageBuffer, path: &Path) -> Result<()> {
    if rgb.channels() != 3 || alpha.channels() != 1 || rgb.width() != alpha.width() || rgb.height() != alpha.height() {
        return Err(Error::dims(rgb.shape_string(), alpha.shape_string()));
    }
    let bytes: Vec<u8> = rgb
        .data()
        .chunks_exact(3)
        .zip(alpha.data())
        .flat_map(|(px, &a)| [to_u8(px[0]), to_u8(px[1]), to_u8(px[2]), to_u8(a)])
        .collect();
    RgbaImage::from_raw(rgb.width() as u32, rgb.height() as u32, bytes).expect("rgba buffer size").save(path)?;
    Ok(())
}

/// Reads a 1-channel mask; pixels of value >= 128 are set.
pub fn load_mask_png(path: &Path) -> Result<BinaryMask> {
    if !path.exists() {
        return Err(Error::MissingFile { path: path.to_path_buf() });
    }
    let g = image::open(path)?.to_luma8();
    let (w, h) = (g.width() as usize, g.height() as usize);
    BinaryMask::new(w, h, g.into_raw().into_iter().map(|v| v >= 128).collect())
}

pub fn save_mask_png(mask: &BinaryMask, path: &Path) -> Result<()> {
    let bytes = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    GrayImage::from_raw(mask.width() as u32, mask.height() as u32, bytes).expect("mask buffer size").save(path)?;
    Ok(())
}

/// Reads `{"<id>": [x, y], ...}` landmark JSON.
pub fn load_landmarks(path: &Path) -> Result<LandmarkSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: std::collections::BTreeMap<u32, [f64; 2]> =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    LandmarkSet::from_points(raw)
}
