//! Raster primitives shared by the augmentation and annotation pipelines.
//!
//! Images are row-major `f32` planes with values in `[0, 1]`. Pixel `(x, y)`
//! has its center at integer coordinates `(x, y)`; landmarks use the same
//! convention, so a horizontal mirror maps `x` to `width - 1 - x`.

mod blur;
mod color;
mod components;
mod io;
mod morph;
mod polygon;
mod resample;
mod rigid;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use blur::{gaussian_blur, gaussian_kernel};
pub use color::{luma, rgb_to_ycrcb, ycrcb_to_rgb};
pub use components::{is_connected, label_components, largest_component};
pub use io::{load_landmarks, load_mask_png, load_png, load_rgba_png, save_mask_png, save_png, save_rgba_png};
pub use morph::{disk_offsets, morph, MorphOp};
pub use polygon::{catmull_rom_closed, fill_polygon, shoelace_area, SPLINE_SUBDIVISIONS};
pub use resample::{crop, resize_bilinear, sample_bilinear};
pub use rigid::{fit_rigid, fit_similarity, RigidFit, SimilarityTransform};

#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("images have 1 or 3 channels, got {channels}")));
        }
        if width * height * channels != data.len() {
            return Err(Error::dims(width * height * channels, data.len()));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self::new(width, height, channels, vec![value; width * height * channels])
            .expect("filled image has consistent dimensions")
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data).expect("from_fn image has consistent dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        let idx = (y * self.width + x) * self.channels + c;
        self.data[idx] = v;
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn clamp01(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    /// Extracts channel `c` as a 1-channel image.
    pub fn channel(&self, c: usize) -> ImageBuffer {
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        ImageBuffer::new(self.width, self.height, 1, data).expect("channel plane")
    }

    /// Interleaves three equally sized 1-channel planes.
    pub fn merge(planes: [&ImageBuffer; 3]) -> Result<ImageBuffer> {
        let (w, h) = (planes[0].width, planes[0].height);
        for p in planes {
            if p.channels != 1 || p.width != w || p.height != h {
                return Err(Error::dims(format!("{w}x{h}x1"), p.shape_string()));
            }
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for i in 0..w * h {
            data.extend(planes.iter().map(|p| p.data[i]));
        }
        ImageBuffer::new(w, h, 3, data)
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| f64::from(v)).sum::<f64>() / self.data.len() as f64
    }

    pub(crate) fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    /// Horizontal mirror.
    pub fn flipped_horizontal(&self) -> ImageBuffer {
        ImageBuffer::from_fn(self.width, self.height, self.channels, |x, y, c| self.get(self.width - 1 - x, y, c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width * height != data.len() {
            return Err(Error::dims(width * height, data.len()));
        }
        Ok(Self { width, height, data })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask { width: self.width, height: self.height, data: self.data.iter().map(|b| !b).collect() }
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> usize {
        self.data.iter().zip(&other.data).filter(|(a, b)| **a && **b).count()
    }

    pub fn union_count(&self, other: &BinaryMask) -> usize {
        self.data.iter().zip(&other.data).filter(|(a, b)| **a || **b).count()
    }

    /// `true` when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.data.iter().zip(&other.data).all(|(a, b)| !a || *b)
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the set pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bb = Some(match bb {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        bb
    }

    /// The mask as a 1-channel image with 0.0 / 1.0 values.
    pub fn to_image(&self) -> ImageBuffer {
        let data = self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        ImageBuffer::new(self.width, self.height, 1, data).expect("mask plane")
    }

    /// Thresholds a 1-channel image: pixels strictly greater than `t` become set.
    pub fn from_threshold(img: &ImageBuffer, t: f32) -> Result<BinaryMask> {
        if img.channels() != 1 {
            return Err(Error::invalid("thresholding needs a 1-channel image"));
        }
        Ok(BinaryMask { width: img.width(), height: img.height(), data: img.data().iter().map(|&v| v > t).collect() })
    }

    pub fn flipped_horizontal(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.get(self.width - 1 - x, y))
    }
}

/// Facial landmarks keyed by canonical landmark ID.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LandmarkSet {
    points: BTreeMap<u32, [f64; 2]>,
}

impl LandmarkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: impl IntoIterator<Item = (u32, [f64; 2])>) -> Result<Self> {
        let mut set = LandmarkSet::new();
        for (id, p) in points {
            if set.points.contains_key(&id) {
                return Err(Error::invalid(format!("duplicate landmark id {id}")));
            }
            set.insert(id, p)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, id: u32, p: [f64; 2]) -> Result<()> {
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::invalid(format!("landmark {id} is not finite")));
        }
        self.points.insert(id, p);
        Ok(())
    }

    pub fn get(&self, id: u32) -> Option<[f64; 2]> {
        self.points.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, [f64; 2])> + '_ {
        self.points.iter().map(|(&k, &v)| (k, v))
    }

    /// Looks up `ids` in order; the error names every missing ID.
    pub fn select(&self, ids: &[u32]) -> Result<Vec<[f64; 2]>> {
        let missing: Vec<u32> = ids.iter().copied().filter(|id| !self.points.contains_key(id)).collect();
        if !missing.is_empty() {
            return Err(Error::invalid(format!("missing landmarks {missing:?}")));
        }
        Ok(ids.iter().map(|id| self.points[id]).collect())
    }

    /// Applies `f` to every point.
    pub fn map_points(&self, mut f: impl FnMut([f64; 2]) -> [f64; 2]) -> LandmarkSet {
        LandmarkSet { points: self.points.iter().map(|(&k, &v)| (k, f(v))).collect() }
    }

    /// Mirrors x about an image of the given width and swaps IDs through `pairs`.
    pub fn mirrored(&self, width: usize, pairs: &[(u32, u32)]) -> LandmarkSet {
        let w = width as f64;
        let mut partner: BTreeMap<u32, u32> = BTreeMap::new();
        for &(a, b) in pairs {
            partner.insert(a, b);
            partner.insert(b, a);
        }
        let points = self
            .points
            .iter()
            .map(|(&id, &[x, y])| (partner.get(&id).copied().unwrap_or(id), [w - 1.0 - x, y]))
            .collect();
        LandmarkSet { points }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(ImageBuffer::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(ImageBuffer::new(2, 2, 3, vec![0.0; 11]).is_err());
        assert!(BinaryMask::new(3, 3, vec![false; 8]).is_err());
    }

    #[test]
    fn landmark_invariants() {
        assert!(LandmarkSet::from_points([(1, [0.0, 0.0]), (1, [1.0, 1.0])]).is_err());
        assert!(LandmarkSet::from_points([(1, [f64::NAN, 0.0])]).is_err());
        let lm = LandmarkSet::from_points([(1, [2.0, 3.0]), (2, [7.0, 3.0]), (5, [4.0, 4.0])]).unwrap();
        let m = lm.mirrored(10, &[(1, 2)]);
        assert_eq!(m.get(1), Some([2.0, 3.0]));
        assert_eq!(m.get(2), Some([7.0, 3.0]));
        assert_eq!(m.get(5), Some([5.0, 4.0]));
        assert_eq!(m.mirrored(10, &[(1, 2)]), lm);
        let err = lm.select(&[1, 9, 11]).unwrap_err().to_string();
        assert!(err.contains("[9, 11]"), "{err}");
    }

    #[test]
    fn landmark_json_uses_id_keys() {
        let lm = LandmarkSet::from_points([(33, [1.5, 2.0])]).unwrap();
        let s = serde_json::to_string(&lm).unwrap();
        assert_eq!(s, r#"{"33":[1.5,2.0]}"#);
        let back: LandmarkSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, lm);
    }
}
