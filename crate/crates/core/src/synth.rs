//! Synthetic faces with landmarks, plus matching glasses templates,
//! backgrounds and mask textures. Used for smoke runs and tests.
//!
//! Faces are drawn on a 128×128 canvas. Both eyes, the eye regions and the
//! lower-face polygon carry the landmark IDs of the default
//! [`LandmarkConfig`].

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::Serialize;

use crate::augment::GlassesTemplate;
use crate::error::{Error, Result};
use crate::geometry::GazeAngles;
use crate::imgcore::{save_png, BinaryMask, ImageBuffer, LandmarkSet};
use crate::landmarks::{LandmarkConfig, Side};
use crate::manifest::{write_jsonl, DatasetId, SampleRecord};
use crate::seeding::rng_from;

pub const FACE_SIZE: usize = 128;

/// Lower-face outline, right half then chin; the left half mirrors it.
const JAW: [(u32, [f64; 2]); 7] = [
    (6, [63.5, 70.0]),
    (122, [51.0, 72.0]),
    (234, [27.0, 78.0]),
    (132, [29.0, 96.0]),
    (172, [37.0, 110.0]),
    (149, [51.0, 118.0]),
    (152, [63.5, 121.0]),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceParams {
    /// Face center shift in pixels.
    pub offset: [f64; 2],
    pub scale: f64,
    pub skin: [f32; 3],
    pub iris_luma: f32,
    pub gaze: GazeAngles,
    pub head_pose: GazeAngles,
}

impl FaceParams {
    pub const CANONICAL: FaceParams = FaceParams {
        offset: [0.0, 0.0],
        scale: 1.0,
        skin: [0.78, 0.6, 0.5],
        iris_luma: 0.15,
        gaze: GazeAngles { pitch: 0.0, yaw: 0.0 },
        head_pose: GazeAngles { pitch: 0.0, yaw: 0.0 },
    };

    pub fn sample(rng: &mut impl Rng) -> Self {
        let u = |rng: &mut dyn rand::RngCore, lo: f64, hi: f64| lo + (hi - lo) * rng.gen::<f64>();
        Self {
            offset: [u(rng, -4.0, 4.0), u(rng, -4.0, 4.0)],
            scale: u(rng, 0.92, 1.08),
            skin: [u(rng, 0.6, 0.9) as f32, u(rng, 0.45, 0.7) as f32, u(rng, 0.35, 0.6) as f32],
            iris_luma: u(rng, 0.05, 0.3) as f32,
            gaze: GazeAngles::new(u(rng, -29.0, 13.0), u(rng, -25.0, 25.0)),
            head_pose: GazeAngles::new(u(rng, -20.0, 20.0), u(rng, -20.0, 20.0)),
        }
    }
}

fn eye_center(side: Side) -> [f64; 2] {
    match side {
        Side::Right => [45.0, 56.0],
        Side::Left => [82.0, 56.0],
    }
}

/// Ring point `i` of `n`: outer corner first, then the lower arc, inner
/// corner, and the upper arc.
fn ring_point(side: Side, c: [f64; 2], a: f64, b: f64, i: usize, n: usize) -> [f64; 2] {
    let t = std::f64::consts::TAU * i as f64 / n as f64;
    let outward = if side == Side::Right { -1.0 } else { 1.0 };
    [c[0] + outward * a * t.cos(), c[1] + b * t.sin()]
}

/// Landmarks of the face described by `p`.
pub fn face_landmarks(p: &FaceParams, cfg: &LandmarkConfig) -> Result<LandmarkSet> {
    let mid = (FACE_SIZE as f64 - 1.0) / 2.0;
    let place = |q: [f64; 2]| [mid + (q[0] - mid) * p.scale + p.offset[0], mid + (q[1] - mid) * p.scale + p.offset[1]];
    let mut lm = LandmarkSet::new();
    for side in Side::BOTH {
        let c = eye_center(side);
        let inner = cfg.inner_eye.side(side);
        for (i, &id) in inner.iter().enumerate() {
            lm.insert(id, place(ring_point(side, c, 10.0, 5.0, i, inner.len())))?;
        }
        let region = cfg.eye_region.side(side);
        for (i, &id) in region.iter().enumerate() {
            lm.insert(id, place(ring_point(side, c, 14.0, 8.5, i, region.len())))?;
        }
    }
    for (id, q) in JAW {
        lm.insert(id, place(q))?;
        if let Some(&(a, b)) = cfg.mirror_pairs.iter().find(|(a, b)| *a == id || *b == id) {
            let twin = if a == id { b } else { a };
            if twin != id {
                lm.insert(twin, place([FACE_SIZE as f64 - 1.0 - q[0], q[1]]))?;
            }
        }
    }
    Ok(lm)
}

fn inside_ellipse(x: f64, y: f64, c: [f64; 2], a: f64, b: f64) -> bool {
    ((x - c[0]) / a).powi(2) + ((y - c[1]) / b).powi(2) <= 1.0
}

/// Renders a face: RGB image, 1-channel foreground matte and landmarks.
pub fn render_face(p: &FaceParams, cfg: &LandmarkConfig) -> Result<(ImageBuffer, ImageBuffer, LandmarkSet)> {
    let n = FACE_SIZE;
    let mid = (n as f64 - 1.0) / 2.0;
    let s = p.scale;
    let to_canvas = |q: [f64; 2]| [mid + (q[0] - mid) * s + p.offset[0], mid + (q[1] - mid) * s + p.offset[1]];
    let head_c = to_canvas([63.5, 72.0]);
    let (ha, hb) = (40.0 * s, 54.0 * s);
    let eyes: Vec<([f64; 2], [f64; 2])> = Side::BOTH
        .iter()
        .map(|&side| {
            let c = to_canvas(eye_center(side));
            let shift = [p.gaze.yaw / 30.0 * -4.0 * s, -p.gaze.pitch / 30.0 * 2.0 * s];
            (c, [c[0] + shift[0], c[1] + shift[1]])
        })
        .collect();
    let iris_r = 4.2 * s;

    let matte = ImageBuffer::from_fn(n, n, 1, |x, y, _| {
        let d = ((x as f64 - head_c[0]) / ha).powi(2) + ((y as f64 - head_c[1]) / hb).powi(2);
        (1.0 - (d - 0.9) / 0.2).clamp(0.0, 1.0) as f32
    });
    let image = ImageBuffer::from_fn(n, n, 3, |x, y, ch| {
        let (xf, yf) = (x as f64, y as f64);
        let bg = 0.25 + 0.5 * (x + 2 * y) as f32 / (3 * n) as f32;
        let mut v = bg;
        let m = matte.get(x, y, 0);
        if m > 0.0 {
            let mut face = p.skin[ch];
            for (c, iris) in &eyes {
                if inside_ellipse(xf, yf, *c, 10.0 * s, 5.0 * s) {
                    face = if inside_ellipse(xf, yf, *iris, iris_r, iris_r) { p.iris_luma } else { 0.92 };
                }
            }
            v = m * face + (1.0 - m) * bg;
        }
        v
    });
    Ok((image, matte, face_landmarks(p, cfg)?))
}

/// A frame-and-lens overlay fitted to the canonical face.
pub fn glasses_template(name: &str, pose: GazeAngles, cfg: &LandmarkConfig) -> Result<GlassesTemplate> {
    let (w, h, top) = (FACE_SIZE, 40, 36.0);
    let canon = face_landmarks(&FaceParams::CANONICAL, cfg)?;
    let ids = &cfg.glasses_anchors;
    let anchors = LandmarkSet::from_points(
        canon.select(ids)?.into_iter().zip(ids.iter()).map(|([x, y], &id)| (id, [x, y - top])),
    )?;
    let boxes: Vec<[f64; 4]> = Side::BOTH
        .iter()
        .map(|&side| {
            let c = eye_center(side);
            [c[0] - 16.0, c[1] - top - 11.0, c[0] + 16.0, c[1] - top + 11.0]
        })
        .collect();
    let in_box = |x: f64, y: f64, b: &[f64; 4], pad: f64| {
        x >= b[0] - pad && x <= b[2] + pad && y >= b[1] - pad && y <= b[3] + pad
    };
    let lens = BinaryMask::from_fn(w, h, |x, y| boxes.iter().any(|b| in_box(x as f64, y as f64, b, 0.0)));
    let frame = BinaryMask::from_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let rim = boxes.iter().any(|b| in_box(xf, yf, b, 2.0) && !in_box(xf, yf, b, 0.0));
        let bridge = xf > boxes[0][2] && xf < boxes[1][0] && (yf - (boxes[0][1] + 6.0)).abs() <= 1.0;
        rim || bridge
    });
    let overlay = ImageBuffer::from_fn(w, h, 3, |_, _, c| [0.12, 0.1, 0.08][c]);
    let alpha = frame.to_image();
    GlassesTemplate::new(name, overlay, alpha, lens, anchors, pose)
}

pub fn background(index: usize) -> ImageBuffer {
    let n = FACE_SIZE;
    ImageBuffer::from_fn(n, n, 3, |x, y, c| {
        let phase = (index as f32 + 1.0) * 0.7 + c as f32;
        let v = 0.5 + 0.4 * ((x as f32 * 0.11 + phase).sin() * (y as f32 * 0.07 - phase).cos());
        v.clamp(0.0, 1.0)
    })
}

pub fn mask_texture(index: usize) -> ImageBuffer {
    ImageBuffer::from_fn(16, 16, 3, |x, y, c| {
        let stripe = ((x + y + index) / 4).is_multiple_of(2);
        if stripe {
            [0.85, 0.9, 0.95][c]
        } else {
            [0.3, 0.45, 0.7][c]
        }
    })
}

/// Paths written by [`write_corpus`].
#[derive(Debug, Clone, Serialize)]
pub struct CorpusPaths {
    pub manifest: PathBuf,
    pub backgrounds: PathBuf,
    pub glasses_library: PathBuf,
    pub mask_textures: PathBuf,
}

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

/// Writes `n` faces with mattes and landmarks, a manifest and the
/// augmentation assets under `dir`.
pub fn write_corpus(dir: &Path, n: usize, seed: u64) -> Result<CorpusPaths> {
    let cfg = LandmarkConfig::default();
    for sub in ["faces", "mattes", "landmarks"] {
        mkdir(&dir.join(sub))?;
    }
    let mut rng = rng_from(seed);
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let p = FaceParams::sample(&mut rng);
        let (img, matte, lm) = render_face(&p, &cfg)?;
        let id = format!("s{i:04}");
        save_png(&img, &dir.join(format!("faces/{id}.png")))?;
        save_png(&matte, &dir.join(format!("mattes/{id}.png")))?;
        let lm_path = dir.join(format!("landmarks/{id}.json"));
        std::fs::write(&lm_path, serde_json::to_string(&lm)?).map_err(|e| Error::io(&lm_path, e))?;
        records.push(SampleRecord {
            sample_id: id.clone(),
            dataset: DatasetId::ALL[i % 3],
            subject: format!("p{:02}", i % 7),
            pitch: p.gaze.pitch,
            yaw: p.gaze.yaw,
            head_pitch: p.head_pose.pitch,
            head_yaw: p.head_pose.yaw,
            head_roll: 0.0,
            glasses: false,
            mask: false,
            image: Some(format!("faces/{id}.png")),
            matte: Some(format!("mattes/{id}.png")),
            landmarks: Some(format!("landmarks/{id}.json")),
        });
    }
    let manifest = dir.join("manifest.jsonl");
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &records)?;
    std::fs::write(&manifest, buf).map_err(|e| Error::io(&manifest, e))?;

    let backgrounds = dir.join("assets/backgrounds");
    let glasses_library = dir.join("assets/glasses");
    let mask_textures = dir.join("assets/masks");
    for d in [&backgrounds, &glasses_library, &mask_textures] {
        mkdir(d)?;
    }
    for i in 0..3 {
        save_png(&background(i), &backgrounds.join(format!("bg{i}.png")))?;
        save_png(&mask_texture(i), &mask_textures.join(format!("tex{i}.png")))?;
    }
    for (name, pitch, yaw) in [("frontal", 0.0, 0.0), ("turned", 0.0, 15.0)] {
        glasses_template(name, GazeAngles::new(pitch, yaw), &cfg)?.save(&glasses_library.join(name))?;
    }
    Ok(CorpusPaths { manifest, backgrounds, glasses_library, mask_textures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{annotate_face, AnnotateConfig};
    use crate::augment::load_library;

    #[test]
    fn landmarks_cover_default_config() {
        let cfg = LandmarkConfig::default();
        let lm = face_landmarks(&FaceParams::CANONICAL, &cfg).unwrap();
        for side in Side::BOTH {
            assert!(lm.select(cfg.inner_eye.side(side)).is_ok());
            assert!(lm.select(cfg.eye_region.side(side)).is_ok());
        }
        assert!(lm.select(&cfg.glasses_anchors).is_ok());
        assert!(lm.select(&cfg.mask_polygon).is_ok());
    }

    #[test]
    fn canonical_face_is_mirror_symmetric() {
        let cfg = LandmarkConfig::default();
        let lm = face_landmarks(&FaceParams::CANONICAL, &cfg).unwrap();
        let mirrored = lm.mirrored(FACE_SIZE, &cfg.mirror_pairs);
        for (id, p) in lm.iter() {
            let q = mirrored.select(&[id]).unwrap()[0];
            assert!((p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9, "id {id}: {p:?} vs {q:?}");
        }
    }

    #[test]
    fn canonical_face_annotates() {
        let cfg = LandmarkConfig::default();
        let (img, _, lm) = render_face(&FaceParams::CANONICAL, &cfg).unwrap();
        let label = annotate_face(&img, &lm, &cfg, &AnnotateConfig::default());
        for side in Side::BOTH {
            let s = label.side(side);
            assert!(s.eye_valid && s.iris_valid, "{side:?}");
        }
    }

    #[test]
    fn corpus_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_corpus(dir.path(), 3, 1).unwrap();
        let lib = load_library(&paths.glasses_library).unwrap();
        assert_eq!(lib.len(), 2);
        let text = std::fs::read_to_string(&paths.manifest).unwrap();
        assert_eq!(text.lines().count(), 3);
    }
}
