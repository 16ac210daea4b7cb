//! Parameterized synthetic eye scenes with known iris ground truth, for
//! validating the iris labeler.
//!
//! A scene is a skin-toned field, an elliptical eye opening of sclera
//! brightness and a dark iris disk. The iris may extend past the eyelids,
//! in which case the ground truth is its visible part.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::imgcore::{BinaryMask, ImageBuffer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyeScene {
    pub width: usize,
    pub height: usize,
    pub eye_center: [f64; 2],
    /// Horizontal and vertical semi-axes of the eye opening.
    pub semi_axes: [f64; 2],
    pub iris_center: [f64; 2],
    pub iris_radius: f64,
    pub skin: f32,
    pub sclera: f32,
    pub iris: f32,
}

impl EyeScene {
    /// Draws a scene with human-like proportions. The iris diameter is 38 to
    /// 50% of the eye width and the eye height 80 to 110% of it; sclera-iris
    /// contrast is at least 0.3.
    pub fn sample(width: usize, height: usize, rng: &mut impl Rng) -> EyeScene {
        let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
        let a = width as f64 * rng.gen_range(0.31..0.39);
        let r = a * rng.gen_range(0.38..0.5);
        let b = r * rng.gen_range(0.8..1.1);
        let iris: f32 = rng.gen_range(0.05..0.4);
        let sclera = (iris + rng.gen_range(0.3..0.6)).min(1.0);
        EyeScene {
            width,
            height,
            eye_center: [cx, cy],
            semi_axes: [a, b],
            iris_center: [cx + rng.gen_range(-0.3..0.3) * (a - r), cy + rng.gen_range(-0.15..0.15) * b],
            iris_radius: r,
            skin: rng.gen_range(0.45..0.7),
            sclera,
            iris,
        }
    }

    fn in_eye(&self, x: f64, y: f64) -> bool {
        let dx = (x - self.eye_center[0]) / self.semi_axes[0];
        let dy = (y - self.eye_center[1]) / self.semi_axes[1];
        dx * dx + dy * dy <= 1.0
    }

    fn in_iris(&self, x: f64, y: f64) -> bool {
        (x - self.iris_center[0]).powi(2) + (y - self.iris_center[1]).powi(2) <= self.iris_radius.powi(2)
    }

    pub fn render(&self) -> ImageBuffer {
        ImageBuffer::from_fn(self.width, self.height, 3, |x, y, _| {
            let (x, y) = (x as f64, y as f64);
            match (self.in_eye(x, y), self.in_iris(x, y)) {
                (true, true) => self.iris,
                (true, false) => self.sclera,
                _ => self.skin,
            }
        })
    }

    /// The eye opening (inner-eye mask).
    pub fn eye_mask(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.in_eye(x as f64, y as f64))
    }

    /// Visible iris pixels.
    pub fn iris_truth(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| {
            self.in_eye(x as f64, y as f64) && self.in_iris(x as f64, y as f64)
        })
    }

    /// The same scene rendered `factor` times larger.
    pub fn scaled(&self, factor: f64) -> EyeScene {
        let s = |p: [f64; 2]| [p[0] * factor, p[1] * factor];
        EyeScene {
            width: (self.width as f64 * factor).round() as usize,
            height: (self.height as f64 * factor).round() as usize,
            eye_center: s(self.eye_center),
            semi_axes: s(self.semi_axes),
            iris_center: s(self.iris_center),
            iris_radius: self.iris_radius * factor,
            ..*self
        }
    }
}
