//! Intensity-based iris segmentation inside the inner-eye region.

use crate::error::{Error, Result};
use crate::imgcore::{gaussian_blur, largest_component, luma, morph, BinaryMask, ImageBuffer, MorphOp};

/// Crop width at which the algorithm's pixel constants apply unscaled.
pub const W_REF: usize = 128;

fn brightness(img: &ImageBuffer) -> ImageBuffer {
    match img.channels() {
        1 => img.clone(),
        _ => ImageBuffer::from_fn(img.width(), img.height(), 1, |x, y, _| {
            luma(img.get(x, y, 0), img.get(x, y, 1), img.get(x, y, 2))
        }),
    }
}

/// Median with the two middle values averaged for even counts.
fn median(mut v: Vec<f32>) -> f32 {
    v.sort_by(f32::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn diameter(d: f64) -> usize {
    (d.round() as usize).max(1)
}

/// Iris mask for an eye crop given its inner-eye mask. Pixel constants
/// scale with `k = width / w_ref`. Returns an empty mask when nothing
/// survives the morphology.
pub fn iris_mask(eye: &ImageBuffer, inner: &BinaryMask, w_ref: usize) -> Result<BinaryMask> {
    let (w, h) = (eye.width(), eye.height());
    if inner.width() != w || inner.height() != h {
        return Err(Error::dims(format!("{w}x{h}"), format!("{}x{}", inner.width(), inner.height())));
    }
    let (x0, _, x1, _) = inner.bounding_box().ok_or_else(|| Error::invalid("inner eye mask is empty"))?;
    if w_ref == 0 {
        return Err(Error::invalid("reference width must be positive"));
    }
    let k = w as f64 / w_ref as f64;

    let mut y = gaussian_blur(&brightness(eye), 2.0 * k);
    let near = morph(inner, MorphOp::Dilate, diameter((x1 - x0 + 1) as f64 / 6.0));
    let outside = gaussian_blur(&near.complement().to_image(), 15.0 * k);
    for (v, o) in y.data_mut().iter_mut().zip(outside.data()) {
        *v += 0.5 * o;
    }
    y.clamp01();

    let inside: Vec<f32> = y.data().iter().zip(inner.data()).filter_map(|(&v, &m)| m.then_some(v)).collect();
    let tau = median(inside);
    let raw = BinaryMask::new(w, h, y.data().iter().map(|&v| v < tau).collect())?;

    let opened = morph(&raw, MorphOp::Open, diameter(13.0 * k));
    let closed = morph(&opened, MorphOp::Close, diameter(5.0 * k));
    let blob = largest_component(&closed);
    if blob.is_empty() {
        return Ok(blob);
    }
    let rounded = BinaryMask::from_threshold(&gaussian_blur(&blob.to_image(), 15.0 * k), 0.2)?;
    Ok(largest_component(&rounded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::iou;
    use crate::imgcore::is_connected;

    fn disk(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r)
    }

    fn ellipse(w: usize, h: usize, a: f64, b: f64) -> BinaryMask {
        let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
        BinaryMask::from_fn(w, h, |x, y| ((x as f64 - cx) / a).powi(2) + ((y as f64 - cy) / b).powi(2) <= 1.0)
    }

    fn paint(eye: &BinaryMask, dark: &[&BinaryMask], sclera: f32, iris: f32) -> ImageBuffer {
        ImageBuffer::from_fn(eye.width(), eye.height(), 3, |x, y, _| {
            if !eye.get(x, y) {
                0.6
            } else if dark.iter().any(|d| d.get(x, y)) {
                iris
            } else {
                sclera
            }
        })
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn centered_dark_disk() {
        let (w, h) = (128, 96);
        let eye = ellipse(w, h, 36.0, 32.0);
        let iris = disk(w, h, 64.0, 48.0, 30.0);
        let img = paint(&eye, &[&iris], 0.9, 0.2);
        let out = iris_mask(&img, &eye, W_REF).unwrap();
        assert!(is_connected(&out));
        let score = iou(&out, &iris).unwrap();
        assert!(score >= 0.8, "iou {score}");
    }

    #[test]
    fn larger_of_two_blobs_survives() {
        let (w, h) = (128, 96);
        let eye = ellipse(w, h, 50.0, 30.0);
        let big = disk(w, h, 38.0, 48.0, 26.0);
        let small = disk(w, h, 92.0, 48.0, 16.0);
        let img = paint(&eye, &[&big, &small], 0.95, 0.1);
        let out = iris_mask(&img, &eye, W_REF).unwrap();
        assert!(is_connected(&out));
        assert!(out.intersection_count(&big) >= big.intersection_count(&eye));
        assert_eq!(out.intersection_count(&small), 0);
    }

    #[test]
    fn uniform_eye_is_not_an_error() {
        let eye = ellipse(128, 96, 40.0, 24.0);
        let img = ImageBuffer::filled(128, 96, 3, 0.5);
        let out = iris_mask(&img, &eye, W_REF).unwrap();
        assert!(out.is_empty() || is_connected(&out));
    }

    #[test]
    fn empty_inner_mask_rejected() {
        let img = ImageBuffer::filled(16, 16, 3, 0.5);
        assert!(iris_mask(&img, &BinaryMask::empty(16, 16), W_REF).is_err());
        assert!(iris_mask(&img, &BinaryMask::empty(8, 16), W_REF).is_err());
    }
}
