//! Pose-indexed eyeglasses overlays.
//!
//! A template library is a directory of template directories, each holding
//! `overlay.png` (RGBA), `lens.png` (lens-region mask) and `template.json`:
//!
//! ```json
//! {"pitch": 0.0, "yaw": 9.0, "anchors": {"27": [41.0, 30.5], "23": [40.0, 52.0], ...}}
//! ```
//!
//! Templates cover non-negative head yaw only; samples with negative yaw use
//! the mirrored template.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GazeAngles;
use crate::imgcore::{
    fit_rigid, load_mask_png, load_rgba_png, sample_bilinear, BinaryMask, ImageBuffer, LandmarkSet, SimilarityTransform,
};

#[derive(Debug, Clone, PartialEq)]
pub struct GlassesTemplate {
    pub name: String,
    pub overlay: ImageBuffer,
    pub alpha: ImageBuffer,
    pub lens: BinaryMask,
    pub anchors: LandmarkSet,
    /// Head pose the template was rendered at.
    pub pose: GazeAngles,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TemplateMeta {
    pitch: f64,
    yaw: f64,
    anchors: LandmarkSet,
}

impl GlassesTemplate {
    pub fn new(
        name: impl Into<String>,
        overlay: ImageBuffer,
        alpha: ImageBuffer,
        lens: BinaryMask,
        anchors: LandmarkSet,
        pose: GazeAngles,
    ) -> Result<Self> {
        let t = Self { name: name.into(), overlay, alpha, lens, anchors, pose };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.overlay.width(), self.overlay.height());
        if self.overlay.channels() != 3
            || self.alpha.channels() != 1
            || self.alpha.width() != w
            || self.alpha.height() != h
            || self.lens.width() != w
            || self.lens.height() != h
        {
            return Err(Error::dims(format!("{w}x{h} overlay, alpha and lens"), format!("template {}", self.name)));
        }
        for (id, [x, y]) in self.anchors.iter() {
            if !(0.0..=(w - 1) as f64).contains(&x) || !(0.0..=(h - 1) as f64).contains(&y) {
                return Err(Error::invalid(format!("template {}: anchor {id} outside image", self.name)));
            }
        }
        if !(-30.0..=30.0).contains(&self.pose.pitch) || !(0.0..=30.0).contains(&self.pose.yaw) {
            return Err(Error::OutOfRange(format!(
                "template {}: pose ({}, {}) outside the template grid",
                self.name, self.pose.pitch, self.pose.yaw
            )));
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("template.json");
        let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: TemplateMeta = serde_json::from_str(&text)?;
        let (overlay, alpha) = load_rgba_png(&dir.join("overlay.png"))?;
        let lens = load_mask_png(&dir.join("lens.png"))?;
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Self::new(name, overlay, alpha, lens, meta.anchors, GazeAngles::new(meta.pitch, meta.yaw))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        crate::imgcore::save_rgba_png(&self.overlay, &self.alpha, &dir.join("overlay.png"))?;
        crate::imgcore::save_mask_png(&self.lens, &dir.join("lens.png"))?;
        let meta = TemplateMeta { pitch: self.pose.pitch, yaw: self.pose.yaw, anchors: self.anchors.clone() };
        let path = dir.join("template.json");
        std::fs::write(&path, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&path, e))
    }

    pub fn mirrored(&self, mirror_pairs: &[(u32, u32)]) -> GlassesTemplate {
        GlassesTemplate {
            name: self.name.clone(),
            overlay: self.overlay.flipped_horizontal(),
            alpha: self.alpha.flipped_horizontal(),
            lens: self.lens.flipped_horizontal(),
            anchors: self.anchors.mirrored(self.overlay.width(), mirror_pairs),
            pose: GazeAngles::new(self.pose.pitch, -self.pose.yaw),
        }
    }
}

/// Loads every subdirectory holding a `template.json`, in name order.
pub fn load_library(dir: &Path) -> Result<Vec<GlassesTemplate>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut dirs: Vec<_> =
        entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.join("template.json").is_file()).collect();
    dirs.sort();
    dirs.iter().map(|d| GlassesTemplate::load(d)).collect()
}

/// Index of the template nearest to `(pitch, |yaw|)` and whether it must be
/// mirrored. Ties go to the earlier template.
pub fn select_template(library: &[GlassesTemplate], head_pose: GazeAngles) -> Result<(usize, bool)> {
    if library.is_empty() {
        return Err(Error::invalid("glasses library is empty"));
    }
    let target = (head_pose.pitch, head_pose.yaw.abs());
    let dist = |t: &GlassesTemplate| (t.pose.pitch - target.0).hypot(t.pose.yaw - target.1);
    let mut best = 0;
    for (i, t) in library.iter().enumerate().skip(1) {
        if dist(t) < dist(&library[best]) {
            best = i;
        }
    }
    Ok((best, head_pose.yaw < 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlassesRanges {
    pub scale: [f64; 2],
    pub opacity: [f64; 2],
    pub reflection_opacity: [f64; 2],
    /// Blend weight between the template's frame color and a random color.
    pub frame_color_mix: [f64; 2],
}

impl Default for GlassesRanges {
    fn default() -> Self {
        Self { scale: [0.9, 1.1], opacity: [0.6, 1.0], reflection_opacity: [0.0, 0.35], frame_color_mix: [0.0, 0.8] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlassesParams {
    pub scale: f64,
    pub opacity: f32,
    pub frame_color: [f32; 3],
    pub frame_color_mix: f32,
    pub reflection_opacity: f32,
    /// Index into the reflection texture list.
    pub reflection: Option<usize>,
}

impl GlassesParams {
    /// Unmodified template: no rescale, full opacity, no reflection.
    pub const PLAIN: GlassesParams = GlassesParams {
        scale: 1.0,
        opacity: 1.0,
        frame_color: [0.0; 3],
        frame_color_mix: 0.0,
        reflection_opacity: 0.0,
        reflection: None,
    };

    pub fn draw(ranges: &GlassesRanges, n_reflections: usize, rng: &mut impl Rng) -> Self {
        let u = |r: [f64; 2], rng: &mut dyn rand::RngCore| r[0] + (r[1] - r[0]) * rng.gen::<f64>();
        GlassesParams {
            scale: u(ranges.scale, rng),
            opacity: u(ranges.opacity, rng) as f32,
            frame_color: [rng.gen(), rng.gen(), rng.gen()],
            frame_color_mix: u(ranges.frame_color_mix, rng) as f32,
            reflection_opacity: u(ranges.reflection_opacity, rng) as f32,
            reflection: (n_reflections > 0).then(|| rng.gen_range(0..n_reflections)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GlassesOutcome {
    pub image: ImageBuffer,
    pub template_index: usize,
    pub mirrored: bool,
    /// Template coordinates to image coordinates.
    pub transform: SimilarityTransform,
}

#[allow(clippy::too_many_arguments)]
pub fn glasses_synthesis(
    img: &ImageBuffer,
    landmarks: &LandmarkSet,
    head_pose: GazeAngles,
    library: &[GlassesTemplate],
    anchor_ids: &[u32],
    mirror_pairs: &[(u32, u32)],
    params: &GlassesParams,
    reflections: &[ImageBuffer],
) -> Result<GlassesOutcome> {
    if img.channels() != 3 {
        return Err(Error::dims("3 channels", img.channels()));
    }
    let face = landmarks.select(anchor_ids)?;
    let (index, mirrored) = select_template(library, head_pose)?;
    let flipped;
    let template = if mirrored {
        flipped = library[index].mirrored(mirror_pairs);
        &flipped
    } else {
        &library[index]
    };
    let tpl_pts = template.anchors.select(anchor_ids)?;
    let src = LandmarkSet::from_points(anchor_ids.iter().copied().zip(tpl_pts))?;
    let dst = LandmarkSet::from_points(anchor_ids.iter().copied().zip(face.iter().copied()))?;
    let fit = fit_rigid(&src, &dst, false)?;
    let n = face.len() as f64;
    let centroid = [face.iter().map(|p| p[0]).sum::<f64>() / n, face.iter().map(|p| p[1]).sum::<f64>() / n];
    let transform = fit.transform.scaled_about(params.scale, centroid);
    let inv = transform.inverse();

    let reflection = match params.reflection {
        Some(i) => Some(reflections.get(i).ok_or_else(|| Error::invalid("reflection index out of range"))?),
        None => None,
    };
    let lens = template.lens.to_image();
    let (tw, th) = (template.overlay.width() as f64, template.overlay.height() as f64);
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let [u, v] = inv.apply([x as f64, y as f64]);
            if u < -0.5 || v < -0.5 || u > tw - 0.5 || v > th - 0.5 {
                continue;
            }
            let a = sample_bilinear(&template.alpha, u, v, 0) * params.opacity;
            let l = sample_bilinear(&lens, u, v, 0) * params.reflection_opacity;
            for c in 0..3 {
                let mut px = out.get(x, y, c);
                if let Some(tex) = reflection {
                    if l > 0.0 {
                        let tx = u / (tw - 1.0).max(1.0) * (tex.width() - 1) as f64;
                        let ty = v / (th - 1.0).max(1.0) * (tex.height() - 1) as f64;
                        let t = sample_bilinear(tex, tx, ty, c.min(tex.channels() - 1));
                        px = px * (1.0 - l) + t * l;
                    }
                }
                let frame = sample_bilinear(&template.overlay, u, v, c) * (1.0 - params.frame_color_mix)
                    + params.frame_color[c] * params.frame_color_mix;
                out.set(x, y, c, px * (1.0 - a) + frame * a);
            }
        }
    }
    out.clamp01();
    Ok(GlassesOutcome { image: out, template_index: index, mirrored, transform })
}
