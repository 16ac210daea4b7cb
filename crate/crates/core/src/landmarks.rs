//! Landmark ID lists for the 478-point face mesh used by the synthesis and
//! labeling steps. Every list is configurable; the defaults follow the
//! mesh's canonical contour indices.
//!
//! Sides are named from the subject's point of view: the subject's right
//! eye appears on the left of an unmirrored image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subject side of a paired facial feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// A closed polygon per eye, listed in contour order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EyePolygons {
    pub left: Vec<u32>,
    pub right: Vec<u32>,
}

impl EyePolygons {
    pub fn side(&self, side: Side) -> &[u32] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandmarkConfig {
    /// Left/right ID pairs swapped under horizontal mirroring.
    pub mirror_pairs: Vec<(u32, u32)>,
    /// Eye region including the eyelid (segmentation targets).
    pub eye_region: EyePolygons,
    /// Inner eye opening, eyelid excluded (iris search region).
    pub inner_eye: EyePolygons,
    pub glasses_anchors: Vec<u32>,
    /// Lower-face polygon for mask synthesis.
    pub mask_polygon: Vec<u32>,
}

const EYE_PAIRS: [(u32, u32); 16] = [
    (33, 263),
    (7, 249),
    (163, 390),
    (144, 373),
    (145, 374),
    (153, 380),
    (154, 381),
    (155, 382),
    (133, 362),
    (173, 398),
    (157, 384),
    (158, 385),
    (159, 386),
    (160, 387),
    (161, 388),
    (246, 466),
];

const RING_PAIRS: [(u32, u32); 16] = [
    (130, 359),
    (25, 255),
    (110, 339),
    (24, 254),
    (23, 253),
    (22, 252),
    (26, 256),
    (112, 341),
    (243, 463),
    (247, 467),
    (30, 260),
    (29, 259),
    (27, 257),
    (28, 258),
    (56, 286),
    (190, 414),
];

const FACE_PAIRS: [(u32, u32); 5] = [(351, 122), (454, 234), (361, 132), (397, 172), (378, 149)];

/// Lower contour followed by the upper contour in reverse.
fn ring(lower: &[u32], upper: &[u32]) -> Vec<u32> {
    lower.iter().chain(upper.iter().rev()).copied().collect()
}

impl Default for LandmarkConfig {
    fn default() -> Self {
        Self {
            mirror_pairs: EYE_PAIRS.iter().chain(&RING_PAIRS).chain(&FACE_PAIRS).copied().collect(),
            eye_region: EyePolygons {
                right: ring(&[130, 25, 110, 24, 23, 22, 26, 112, 243], &[247, 30, 29, 27, 28, 56, 190]),
                left: ring(&[359, 255, 339, 254, 253, 252, 256, 341, 463], &[467, 260, 259, 257, 258, 286, 414]),
            },
            inner_eye: EyePolygons {
                right: ring(&[33, 7, 163, 144, 145, 153, 154, 155, 133], &[246, 161, 160, 159, 158, 157, 173]),
                left: ring(&[263, 249, 390, 373, 374, 380, 381, 382, 362], &[466, 388, 387, 386, 385, 384, 398]),
            },
            glasses_anchors: vec![27, 23, 257, 253],
            mask_polygon: vec![6, 351, 454, 361, 397, 378, 152, 149, 172, 132, 234, 122],
        }
    }
}

impl LandmarkConfig {
    pub fn validate(&self) -> Result<()> {
        let polys = [
            ("eye_region.left", &self.eye_region.left),
            ("eye_region.right", &self.eye_region.right),
            ("inner_eye.left", &self.inner_eye.left),
            ("inner_eye.right", &self.inner_eye.right),
            ("mask_polygon", &self.mask_polygon),
        ];
        for (name, ids) in polys {
            if ids.len() < 3 {
                return Err(Error::invalid(format!("{name} needs at least 3 landmarks")));
            }
        }
        if self.glasses_anchors.len() < 2 {
            return Err(Error::invalid("glasses_anchors needs at least 2 landmarks"));
        }
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in &self.mirror_pairs {
            if a == b || !seen.insert(a) || !seen.insert(b) {
                return Err(Error::invalid(format!("mirror pair ({a}, {b}) overlaps another pair")));
            }
        }
        Ok(())
    }
}
