//! Least-squares 2-D similarity fitting (Procrustes / Umeyama).

use serde::{Deserialize, Serialize};

use super::LandmarkSet;
use crate::error::{Error, Result};

/// `p' = scale * R(angle) * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    /// Rotation angle in radians (counter-clockwise in a y-up frame).
    pub angle: f64,
    pub scale: f64,
    pub translation: [f64; 2],
}

impl SimilarityTransform {
    pub const IDENTITY: SimilarityTransform = SimilarityTransform { angle: 0.0, scale: 1.0, translation: [0.0, 0.0] };

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        [
            self.scale * (c * p[0] - s * p[1]) + self.translation[0],
            self.scale * (s * p[0] + c * p[1]) + self.translation[1],
        ]
    }

    pub fn inverse(&self) -> SimilarityTransform {
        let inv = SimilarityTransform { angle: -self.angle, scale: 1.0 / self.scale, translation: [0.0, 0.0] };
        let t = inv.apply(self.translation);
        SimilarityTransform { translation: [-t[0], -t[1]], ..inv }
    }

    /// Scales about `center`, after this transform.
    pub fn scaled_about(&self, factor: f64, center: [f64; 2]) -> SimilarityTransform {
        SimilarityTransform {
            angle: self.angle,
            scale: self.scale * factor,
            translation: [
                factor * (self.translation[0] - center[0]) + center[0],
                factor * (self.translation[1] - center[1]) + center[1],
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidFit {
    pub transform: SimilarityTransform,
    /// Root-mean-square distance between mapped source and destination points.
    pub rms_residual: f64,
}

/// Fits `dst ≈ T(src)` over corresponding point lists.
pub fn fit_similarity(src: &[[f64; 2]], dst: &[[f64; 2]], with_scale: bool) -> Result<RigidFit> {
    if src.len() != dst.len() {
        return Err(Error::dims(src.len(), dst.len()));
    }
    let n = src.len();
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 correspondences, got {n}")));
    }
    let centroid = |pts: &[[f64; 2]]| {
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
        [sx / n as f64, sy / n as f64]
    };
    let cs = centroid(src);
    let cd = centroid(dst);
    let (mut dot, mut cross, mut var_src) = (0.0, 0.0, 0.0);
    for (s, d) in src.iter().zip(dst) {
        let (sx, sy) = (s[0] - cs[0], s[1] - cs[1]);
        let (dx, dy) = (d[0] - cd[0], d[1] - cd[1]);
        dot += sx * dx + sy * dy;
        cross += sx * dy - sy * dx;
        var_src += sx * sx + sy * sy;
    }
    if var_src < 1e-12 {
        return Err(Error::Degenerate("source points are coincident".into()));
    }
    let angle = cross.atan2(dot);
    let scale = if with_scale { (dot * dot + cross * cross).sqrt() / var_src } else { 1.0 };
    let rot = SimilarityTransform { angle, scale, translation: [0.0, 0.0] };
    let rc = rot.apply(cs);
    let transform = SimilarityTransform { translation: [cd[0] - rc[0], cd[1] - rc[1]], ..rot };
    let sq: f64 = src
        .iter()
        .zip(dst)
        .map(|(s, d)| {
            let m = transform.apply(*s);
            (m[0] - d[0]).powi(2) + (m[1] - d[1]).powi(2)
        })
        .sum();
    Ok(RigidFit { transform, rms_residual: (sq / n as f64).sqrt() })
}

/// Fits over the landmark IDs present in both sets, in ascending ID order.
pub fn fit_rigid(src: &LandmarkSet, dst: &LandmarkSet, with_scale: bool) -> Result<RigidFit> {
    let (a, b): (Vec<_>, Vec<_>) = src.iter().filter_map(|(id, p)| dst.get(id).map(|q| (p, q))).unzip();
    fit_similarity(&a, &b, with_scale)
}
