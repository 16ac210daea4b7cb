//! Eye-region and iris segmentation labels generated from landmarks and
//! image intensity, with IoU-based quality filtering.

mod iris;
pub mod synthetic;

pub use iris::{iris_mask, W_REF};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{fill_polygon, resize_bilinear, BinaryMask, ImageBuffer, LandmarkSet};
use crate::landmarks::{LandmarkConfig, Side};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotateConfig {
    /// Eye crops are resampled to this width.
    pub w_ref: usize,
    /// Margin added on every side of the inner-eye bounding box, as a
    /// fraction of its width.
    pub crop_margin: f64,
    pub iou_threshold: f64,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        Self { w_ref: W_REF, crop_margin: 0.4, iou_threshold: 0.2 }
    }
}

impl AnnotateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w_ref < 8 {
            return Err(Error::invalid("w_ref must be at least 8"));
        }
        if !(self.crop_margin >= 0.0) {
            return Err(Error::invalid("crop_margin must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.iou_threshold) {
            return Err(Error::invalid("iou_threshold outside [0, 1]"));
        }
        Ok(())
    }
}

/// `|a ∩ b| / |a ∪ b|`, 0 for an empty union.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::dims(format!("{}x{}", a.width(), a.height()), format!("{}x{}", b.width(), b.height())));
    }
    let union = a.union_count(b);
    Ok(if union == 0 { 0.0 } else { a.intersection_count(b) as f64 / union as f64 })
}

pub fn eye_region_mask(
    landmarks: &LandmarkSet,
    side: Side,
    cfg: &LandmarkConfig,
    width: usize,
    height: usize,
) -> Result<BinaryMask> {
    let pts = landmarks.select(cfg.eye_region.side(side))?;
    fill_polygon(&pts, true, width, height)
}

/// A resampled region around one eye. Crop pixel `(u, v)` has its center at
/// face coordinates `origin + ((u, v) + 0.5) * scale - 0.5`.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeCrop {
    pub image: ImageBuffer,
    pub origin: [usize; 2],
    /// Face pixels per crop pixel along x and y.
    pub scale: [f64; 2],
    /// Size of the source region in face pixels.
    pub region: [usize; 2],
    pub side: Side,
}

impl EyeCrop {
    /// Crops the inner-eye bounding box plus a margin (clipped to the image)
    /// and resamples it to `w_ref` pixels wide.
    pub fn from_landmarks(
        face: &ImageBuffer,
        landmarks: &LandmarkSet,
        ids: &[u32],
        side: Side,
        w_ref: usize,
        margin: f64,
    ) -> Result<EyeCrop> {
        let pts = landmarks.select(ids)?;
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for [x, y] in &pts {
            x0 = x0.min(*x);
            y0 = y0.min(*y);
            x1 = x1.max(*x);
            y1 = y1.max(*y);
        }
        let pad = margin * (x1 - x0);
        let (fw, fh) = (face.width() as f64, face.height() as f64);
        let left = (x0 - pad).floor().clamp(0.0, fw) as usize;
        let top = (y0 - pad).floor().clamp(0.0, fh) as usize;
        let right = ((x1 + pad).ceil() + 1.0).clamp(0.0, fw) as usize;
        let bottom = ((y1 + pad).ceil() + 1.0).clamp(0.0, fh) as usize;
        if right <= left + 1 || bottom <= top + 1 {
            return Err(Error::Degenerate(format!("{} eye crop is empty", side.name())));
        }
        let (cw, ch) = (right - left, bottom - top);
        let out_h = ((ch as f64 * w_ref as f64 / cw as f64).round() as usize).max(1);
        let region = crate::imgcore::crop(face, left, top, cw, ch);
        Ok(EyeCrop {
            image: resize_bilinear(&region, w_ref, out_h),
            origin: [left, top],
            scale: [cw as f64 / w_ref as f64, ch as f64 / out_h as f64],
            region: [cw, ch],
            side,
        })
    }

    pub fn to_crop(&self, p: [f64; 2]) -> [f64; 2] {
        [
            (p[0] - self.origin[0] as f64 + 0.5) / self.scale[0] - 0.5,
            (p[1] - self.origin[1] as f64 + 0.5) / self.scale[1] - 0.5,
        ]
    }

    /// Maps a crop-space mask into a face-sized mask by nearest sampling.
    pub fn mask_to_face(&self, mask: &BinaryMask, width: usize, height: usize) -> BinaryMask {
        let [ox, oy] = self.origin;
        let (cw, ch) = (mask.width() as f64, mask.height() as f64);
        BinaryMask::from_fn(width, height, |x, y| {
            if x < ox || y < oy || x >= ox + self.region[0] || y >= oy + self.region[1] {
                return false;
            }
            let [u, v] = self.to_crop([x as f64, y as f64]);
            let u = u.round().clamp(0.0, cw - 1.0) as usize;
            let v = v.round().clamp(0.0, ch - 1.0) as usize;
            mask.get(u, v)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SideLabel {
    pub eye: BinaryMask,
    pub iris: BinaryMask,
    pub eye_valid: bool,
    pub iris_valid: bool,
}

impl SideLabel {
    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            eye: BinaryMask::empty(width, height),
            iris: BinaryMask::empty(width, height),
            eye_valid: false,
            iris_valid: false,
        }
    }

    pub fn iou(&self) -> f64 {
        iou(&self.eye, &self.iris).unwrap_or(0.0)
    }
}

/// Eye and iris masks for both eyes in face-image coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SegLabel {
    pub left: SideLabel,
    pub right: SideLabel,
}

impl SegLabel {
    pub fn side(&self, side: Side) -> &SideLabel {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut SideLabel {
        match side {
            Side::Left => &mut self.left,
            Side::Right => &mut self.right,
        }
    }
}

/// Invalidates both masks of a side whose eye/iris IoU is below `threshold`
/// or whose iris is missing.
pub fn filter_labels(mut label: SegLabel, threshold: f64) -> SegLabel {
    for side in Side::BOTH {
        let s = label.side_mut(side);
        let ok = s.eye_valid && s.iris_valid && !s.iris.is_empty() && s.iou() >= threshold;
        if !ok {
            s.eye_valid = false;
            s.iris_valid = false;
        }
    }
    label
}

fn annotate_side(
    face: &ImageBuffer,
    landmarks: &LandmarkSet,
    side: Side,
    lm: &LandmarkConfig,
    cfg: &AnnotateConfig,
) -> SideLabel {
    let (w, h) = (face.width(), face.height());
    let mut label = SideLabel::invalid(w, h);
    if let Ok(eye) = eye_region_mask(landmarks, side, lm, w, h) {
        label.eye_valid = !eye.is_empty();
        label.eye = eye;
    }
    let ids = lm.inner_eye.side(side);
    let iris = EyeCrop::from_landmarks(face, landmarks, ids, side, cfg.w_ref, cfg.crop_margin).and_then(|crop| {
        let pts: Vec<[f64; 2]> = landmarks.select(ids)?.into_iter().map(|p| crop.to_crop(p)).collect();
        let inner = fill_polygon(&pts, true, crop.image.width(), crop.image.height())?;
        let m = iris_mask(&crop.image, &inner, cfg.w_ref)?;
        Ok(crop.mask_to_face(&m, w, h))
    });
    if let Ok(m) = iris {
        label.iris_valid = !m.is_empty();
        label.iris = m;
    }
    label
}

/// Unfiltered labels for one face; failures show up as invalid flags.
pub fn annotate_face(
    face: &ImageBuffer,
    landmarks: &LandmarkSet,
    lm: &LandmarkConfig,
    cfg: &AnnotateConfig,
) -> SegLabel {
    SegLabel {
        left: annotate_side(face, landmarks, Side::Left, lm, cfg),
        right: annotate_side(face, landmarks, Side::Right, lm, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::synthetic::EyeScene;
    use super::*;
    use crate::imgcore::is_connected;
    use crate::seeding::rng_from;
    use proptest::prelude::*;

    #[test]
    fn iou_examples() {
        let a = BinaryMask::from_fn(10, 10, |x, _| x < 4);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &a.complement()).unwrap(), 0.0);
        assert_eq!(iou(&BinaryMask::empty(3, 3), &BinaryMask::empty(3, 3)).unwrap(), 0.0);
        let eye = BinaryMask::from_fn(20, 20, |x, y| x < 10 && y < 8);
        let iris = BinaryMask::from_fn(20, 20, |x, y| x < 5 && y < 4);
        assert_eq!(iou(&eye, &iris).unwrap(), 0.25);
        assert!(iou(&a, &BinaryMask::empty(5, 5)).is_err());
    }

    fn ellipse_landmarks(ids: &[u32], c: [f64; 2], a: f64, b: f64) -> LandmarkSet {
        let n = ids.len() as f64;
        LandmarkSet::from_points(ids.iter().enumerate().map(|(i, &id)| {
            let t = std::f64::consts::TAU * i as f64 / n;
            (id, [c[0] + a * t.cos(), c[1] + b * t.sin()])
        }))
        .unwrap()
    }

    #[test]
    fn eye_region_matches_ellipse_area() {
        let cfg = LandmarkConfig::default();
        let lm = ellipse_landmarks(cfg.eye_region.side(Side::Right), [60.0, 50.0], 30.0, 14.0);
        let m = eye_region_mask(&lm, Side::Right, &cfg, 120, 100).unwrap();
        let area = std::f64::consts::PI * 30.0 * 14.0;
        assert!((m.count() as f64 - area).abs() / area < 0.05, "{} vs {area}", m.count());
    }

    #[test]
    fn collinear_eye_is_invalid() {
        let cfg = LandmarkConfig::default();
        let ids = cfg.eye_region.side(Side::Left);
        let lm = LandmarkSet::from_points(ids.iter().enumerate().map(|(i, &id)| (id, [i as f64, 5.0]))).unwrap();
        assert!(eye_region_mask(&lm, Side::Left, &cfg, 40, 40).is_err());
        let face = ImageBuffer::filled(40, 40, 3, 0.5);
        let label = annotate_face(&face, &lm, &cfg, &AnnotateConfig::default());
        assert!(!label.left.eye_valid && !label.right.eye_valid);
    }

    fn label_with_iou(eye_px: usize, iris_px: usize) -> SideLabel {
        SideLabel {
            eye: BinaryMask::from_fn(100, 1, |x, _| x < eye_px),
            iris: BinaryMask::from_fn(100, 1, |x, _| x < iris_px),
            eye_valid: true,
            iris_valid: true,
        }
    }

    #[test]
    fn filter_threshold() {
        let label = SegLabel { left: label_with_iou(80, 20), right: label_with_iou(80, 12) };
        let f = filter_labels(label, 0.2);
        assert!(f.left.eye_valid && f.left.iris_valid);
        assert!(!f.right.eye_valid && !f.right.iris_valid);
        assert_eq!(filter_labels(f.clone(), 0.2), f);
        let missing = SegLabel {
            left: SideLabel { iris: BinaryMask::empty(100, 1), iris_valid: false, ..label_with_iou(80, 20) },
            right: label_with_iou(80, 40),
        };
        assert!(!filter_labels(missing, 0.2).left.eye_valid);
    }

    #[test]
    fn crop_maps_back() {
        let face = ImageBuffer::from_fn(200, 150, 3, |x, y, _| ((x + y) % 9) as f32 / 9.0);
        let cfg = LandmarkConfig::default();
        let ids = cfg.inner_eye.side(Side::Left);
        let lm = ellipse_landmarks(ids, [120.0, 70.0], 20.0, 8.0);
        let crop = EyeCrop::from_landmarks(&face, &lm, ids, Side::Left, 128, 0.4).unwrap();
        assert_eq!(crop.image.width(), 128);
        let full = BinaryMask::from_fn(crop.image.width(), crop.image.height(), |_, _| true);
        let back = crop.mask_to_face(&full, 200, 150);
        let (x0, y0, x1, y1) = back.bounding_box().unwrap();
        assert!(x0 <= 84 && x1 >= 156 && y0 <= 54 && y1 >= 86, "{x0} {y0} {x1} {y1}");
        let c = crop.to_crop([120.0, 70.0]);
        assert!((c[0] - 63.5).abs() < 2.0);
    }

    #[test]
    fn scale_equivariance() {
        let mut rng = rng_from(17);
        for _ in 0..5 {
            let scene = EyeScene::sample(128, 96, &mut rng);
            let base = iris_mask(&scene.render(), &scene.eye_mask(), W_REF).unwrap();
            let big = scene.scaled(2.0);
            let out = iris_mask(&big.render(), &big.eye_mask(), W_REF).unwrap();
            let down = BinaryMask::from_threshold(&resize_bilinear(&out.to_image(), 128, 96), 0.5).unwrap();
            let truth = scene.iris_truth();
            let d = (iou(&base, &truth).unwrap() - iou(&down, &truth).unwrap()).abs();
            assert!(d < 0.05, "iou difference {d}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn iris_output_single_component(seed in any::<u64>()) {
            let scene = EyeScene::sample(96, 72, &mut rng_from(seed));
            let out = iris_mask(&scene.render(), &scene.eye_mask(), W_REF).unwrap();
            prop_assert!(out.is_empty() || is_connected(&out));
        }
    }
}
