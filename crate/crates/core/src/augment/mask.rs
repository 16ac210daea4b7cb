//! Lower-face mask occlusion.

use crate::error::{Error, Result};
use crate::imgcore::{fill_polygon, BinaryMask, ImageBuffer, LandmarkSet};

#[derive(Debug, Clone, PartialEq)]
pub enum MaskFill<'a> {
    Color([f32; 3]),
    /// Tiled from the image origin.
    Texture(&'a ImageBuffer),
}

/// The smoothed polygon region through `ids`.
pub fn mask_region(landmarks: &LandmarkSet, ids: &[u32], width: usize, height: usize) -> Result<BinaryMask> {
    let pts = landmarks.select(ids)?;
    fill_polygon(&pts, true, width, height)
}

pub fn mask_synthesis(img: &ImageBuffer, landmarks: &LandmarkSet, ids: &[u32], fill: &MaskFill) -> Result<ImageBuffer> {
    if img.channels() != 3 {
        return Err(Error::dims("3 channels", img.channels()));
    }
    let region = mask_region(landmarks, ids, img.width(), img.height())?;
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if !region.get(x, y) {
                continue;
            }
            for c in 0..3 {
                let v = match fill {
                    MaskFill::Color(rgb) => rgb[c],
                    MaskFill::Texture(t) => t.get(x % t.width(), y % t.height(), c.min(t.channels() - 1)),
                };
                out.set(x, y, c, v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::shoelace_area;

    const IDS: [u32; 12] = [6, 351, 454, 361, 397, 378, 152, 149, 172, 132, 234, 122];

    /// Nose bridge, cheeks and jaw of a frontal 200x200 face.
    fn face() -> LandmarkSet {
        let pts = [
            [100.0, 95.0],
            [122.0, 100.0],
            [165.0, 105.0],
            [162.0, 140.0],
            [148.0, 165.0],
            [125.0, 183.0],
            [100.0, 188.0],
            [75.0, 183.0],
            [52.0, 165.0],
            [38.0, 140.0],
            [35.0, 105.0],
            [78.0, 100.0],
        ];
        LandmarkSet::from_points(IDS.iter().copied().zip(pts)).unwrap()
    }

    #[test]
    fn fills_inside_only() {
        let img = ImageBuffer::from_fn(200, 200, 3, |x, y, c| ((x + 2 * y + c) % 7) as f32 / 7.0);
        let color = [0.1, 0.6, 0.9];
        let out = mask_synthesis(&img, &face(), &IDS, &MaskFill::Color(color)).unwrap();
        let region = mask_region(&face(), &IDS, 200, 200).unwrap();
        for y in 0..200 {
            for x in 0..200 {
                for (c, &fill) in color.iter().enumerate() {
                    let want = if region.get(x, y) { fill } else { img.get(x, y, c) };
                    assert_eq!(out.get(x, y, c), want);
                }
            }
        }
    }

    #[test]
    fn smoothed_area_close_to_polygon() {
        let pts = face().select(&IDS).unwrap();
        let analytic = shoelace_area(&pts).abs();
        let filled = mask_region(&face(), &IDS, 200, 200).unwrap().count() as f64;
        assert!((filled - analytic).abs() / analytic < 0.05, "{filled} vs {analytic}");
    }

    #[test]
    fn texture_tiles() {
        let img = ImageBuffer::filled(200, 200, 3, 0.0);
        let tex = ImageBuffer::from_fn(3, 2, 1, |x, y, _| (x + 3 * y) as f32 / 6.0);
        let out = mask_synthesis(&img, &face(), &IDS, &MaskFill::Texture(&tex)).unwrap();
        assert_eq!(out.get(100, 150, 1), tex.get(100 % 3, 0, 0));
    }

    #[test]
    fn missing_landmarks() {
        let mut lm = LandmarkSet::new();
        lm.insert(6, [1.0, 1.0]).unwrap();
        let img = ImageBuffer::filled(10, 10, 3, 0.0);
        assert!(mask_synthesis(&img, &lm, &IDS, &MaskFill::Color([0.0; 3])).is_err());
    }
}
