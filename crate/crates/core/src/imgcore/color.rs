//! BT.601 full-range YCrCb with chroma centered on 0.5.
//!
//! Channel order of the converted image is (Y, Cr, Cb).

use super::ImageBuffer;
use crate::error::{Error, Result};

const KR: f64 = 0.299;
const KB: f64 = 0.114;
const KG: f64 = 1.0 - KR - KB;

#[inline]
pub fn luma(r: f32, g: f32, b: f32) -> f32 {
    (KR * f64::from(r) + KG * f64::from(g) + KB * f64::from(b)) as f32
}

pub fn rgb_to_ycrcb(img: &ImageBuffer) -> Result<ImageBuffer> {
    require_rgb(img)?;
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let (r, g, b) = (f64::from(px[0]), f64::from(px[1]), f64::from(px[2]));
        let y = KR * r + KG * g + KB * b;
        px[0] = y as f32;
        px[1] = (0.5 + (r - y) / (2.0 * (1.0 - KR))) as f32;
        px[2] = (0.5 + (b - y) / (2.0 * (1.0 - KB))) as f32;
    }
    Ok(out)
}

pub fn ycrcb_to_rgb(img: &ImageBuffer) -> Result<ImageBuffer> {
    require_rgb(img)?;
    let mut out = img.clone();
    for px in out.data_mut().chunks_exact_mut(3) {
        let (y, cr, cb) = (f64::from(px[0]), f64::from(px[1]), f64::from(px[2]));
        let r = y + 2.0 * (1.0 - KR) * (cr - 0.5);
        let b = y + 2.0 * (1.0 - KB) * (cb - 0.5);
        let g = (y - KR * r - KB * b) / KG;
        px[0] = r as f32;
        px[1] = g as f32;
        px[2] = b as f32;
    }
    Ok(out)
}

fn require_rgb(img: &ImageBuffer) -> Result<()> {
    if img.channels() != 3 {
        return Err(Error::invalid(format!("color conversion needs 3 channels, got {}", img.channels())));
    }
    Ok(())
}
