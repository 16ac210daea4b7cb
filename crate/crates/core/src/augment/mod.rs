//! Stochastic multi-view augmentation.
//!
//! Each view runs a fixed method order: flip, background, glasses, mask,
//! illumination, color jitter, desaturation, blur, sensor noise. Whether a
//! method runs is an independent Bernoulli draw per view. Its parameters
//! come from a generator derived from the view seed and the method, so a
//! view depends only on `(seed, sample_id, epoch, view_index)`.

mod glasses;
mod mask;
mod ops;

pub use glasses::{
    glasses_synthesis, load_library, select_template, GlassesOutcome, GlassesParams, GlassesRanges, GlassesTemplate,
};
pub use mask::{mask_region, mask_synthesis, MaskFill};
pub use ops::{background_replace, blur, color_jitter, desaturate, flip, illumination, sensor_noise};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GazeAngles;
use crate::imgcore::{resize_bilinear, ImageBuffer, LandmarkSet};
use crate::landmarks::LandmarkConfig;
use crate::seeding::{hash_str, mix, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Background,
    Glasses,
    Mask,
    Illumination,
    ColorJitter,
    Desaturation,
    Blur,
    SensorNoise,
}

impl Method {
    /// Pipeline order after the flip.
    pub const ORDER: [Method; 8] = [
        Method::Background,
        Method::Glasses,
        Method::Mask,
        Method::Illumination,
        Method::ColorJitter,
        Method::Desaturation,
        Method::Blur,
        Method::SensorNoise,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodProbabilities {
    pub color_jitter: f64,
    pub background: f64,
    pub illumination: f64,
    pub sensor_noise: f64,
    pub glasses: f64,
    pub mask: f64,
    pub blur: f64,
    pub desaturation: f64,
}

impl Default for MethodProbabilities {
    fn default() -> Self {
        Self {
            color_jitter: 1.0,
            background: 0.95,
            illumination: 0.5,
            sensor_noise: 0.5,
            glasses: 0.5,
            mask: 0.5,
            blur: 0.25,
            desaturation: 0.1,
        }
    }
}

impl MethodProbabilities {
    pub const NONE: MethodProbabilities = MethodProbabilities {
        color_jitter: 0.0,
        background: 0.0,
        illumination: 0.0,
        sensor_noise: 0.0,
        glasses: 0.0,
        mask: 0.0,
        blur: 0.0,
        desaturation: 0.0,
    };

    pub fn get(&self, m: Method) -> f64 {
        match m {
            Method::Background => self.background,
            Method::Glasses => self.glasses,
            Method::Mask => self.mask,
            Method::Illumination => self.illumination,
            Method::ColorJitter => self.color_jitter,
            Method::Desaturation => self.desaturation,
            Method::Blur => self.blur,
            Method::SensorNoise => self.sensor_noise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub alpha_y: f64,
    pub alpha_c: f64,
    pub blotch: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentRanges {
    pub illumination_opacity: [f64; 2],
    pub color_gain: [f64; 2],
    pub color_offset: [f64; 2],
    pub blur_sigma: [f64; 2],
    pub desaturation: [f64; 2],
    pub noise: NoiseParams,
    pub glasses: GlassesRanges,
    pub mask_solid_probability: f64,
}

impl Default for AugmentRanges {
    fn default() -> Self {
        Self {
            illumination_opacity: [0.2, 0.8],
            color_gain: [0.8, 1.2],
            color_offset: [-0.1, 0.1],
            blur_sigma: [0.5, 1.5],
            desaturation: [0.6, 1.0],
            noise: NoiseParams { alpha_y: 11.0, alpha_c: 15.0, blotch: 2.0 },
            glasses: GlassesRanges::default(),
            mask_solid_probability: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentProtocol {
    pub probabilities: MethodProbabilities,
    pub views_per_sample: usize,
    /// Mirror views 0, 2, 4, ...
    #[serde(default = "default_true")]
    pub flip_even_views: bool,
    #[serde(default)]
    pub ranges: AugmentRanges,
}

fn default_true() -> bool {
    true
}

impl Default for AugmentProtocol {
    fn default() -> Self {
        Self {
            probabilities: MethodProbabilities::default(),
            views_per_sample: 4,
            flip_even_views: true,
            ranges: AugmentRanges::default(),
        }
    }
}

fn check_range(name: &str, r: [f64; 2], lo: f64, hi: f64) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && lo <= r[0] && r[0] <= r[1] && r[1] <= hi) {
        return Err(Error::invalid(format!("{name} range {r:?} must be ordered within [{lo}, {hi}]")));
    }
    Ok(())
}

impl AugmentProtocol {
    pub fn validate(&self) -> Result<()> {
        for m in Method::ORDER {
            let p = self.probabilities.get(m);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("probability {p} for {m:?} outside [0, 1]")));
            }
        }
        if self.views_per_sample == 0 {
            return Err(Error::invalid("views_per_sample must be at least 1"));
        }
        let r = &self.ranges;
        check_range("illumination_opacity", r.illumination_opacity, 0.0, 1.0)?;
        check_range("color_gain", r.color_gain, 0.0, f64::MAX)?;
        check_range("color_offset", r.color_offset, -1.0, 1.0)?;
        check_range("blur_sigma", r.blur_sigma, 0.0, f64::MAX)?;
        check_range("desaturation", r.desaturation, 0.0, 1.0)?;
        check_range("glasses.scale", r.glasses.scale, 1e-3, f64::MAX)?;
        check_range("glasses.opacity", r.glasses.opacity, 0.0, 1.0)?;
        check_range("glasses.reflection_opacity", r.glasses.reflection_opacity, 0.0, 1.0)?;
        check_range("glasses.frame_color_mix", r.glasses.frame_color_mix, 0.0, 1.0)?;
        if !(0.0..=1.0).contains(&r.mask_solid_probability) {
            return Err(Error::invalid("mask_solid_probability outside [0, 1]"));
        }
        let n = r.noise;
        if !(n.alpha_y >= 0.0 && n.alpha_c >= 0.0 && n.blotch >= 0.0) {
            return Err(Error::invalid("noise parameters must be non-negative"));
        }
        Ok(())
    }
}

/// Shared inputs for synthesis: background scenes (also used as lens
/// reflections), the glasses library and mask textures.
#[derive(Debug, Clone, Default)]
pub struct AugmentAssets {
    pub backgrounds: Vec<ImageBuffer>,
    pub glasses: Vec<GlassesTemplate>,
    pub mask_textures: Vec<ImageBuffer>,
}

#[derive(Debug, Clone)]
pub struct AugmentSource {
    pub sample_id: String,
    pub image: ImageBuffer,
    /// Foreground matte, 1 channel; background replacement needs it.
    pub matte: Option<ImageBuffer>,
    /// Glasses and mask synthesis need landmarks.
    pub landmarks: Option<LandmarkSet>,
    pub gaze: GazeAngles,
    pub head_pose: GazeAngles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedView {
    pub view_index: usize,
    pub seed: u64,
    pub image: ImageBuffer,
    pub gaze: GazeAngles,
    pub glasses_flag: bool,
    pub mask_flag: bool,
    pub flip_applied: bool,
    /// Methods that ran, in pipeline order.
    pub applied: Vec<Method>,
}

pub fn view_seed(seed: u64, sample_id: &str, epoch: u64, view_index: usize) -> u64 {
    mix(&[seed, hash_str(sample_id), epoch, view_index as u64])
}

fn uniform(r: [f64; 2], rng: &mut impl Rng) -> f64 {
    r[0] + (r[1] - r[0]) * rng.gen::<f64>()
}

pub fn build_views(
    source: &AugmentSource,
    protocol: &AugmentProtocol,
    assets: &AugmentAssets,
    landmark_cfg: &LandmarkConfig,
    seed: u64,
    epoch: u64,
) -> Result<Vec<AugmentedView>> {
    protocol.validate()?;
    (0..protocol.views_per_sample)
        .map(|i| build_view(source, protocol, assets, landmark_cfg, view_seed(seed, &source.sample_id, epoch, i), i))
        .collect()
}

fn build_view(
    source: &AugmentSource,
    protocol: &AugmentProtocol,
    assets: &AugmentAssets,
    cfg: &LandmarkConfig,
    seed: u64,
    view_index: usize,
) -> Result<AugmentedView> {
    let mut img = if source.image.channels() == 1 {
        let g = &source.image;
        ImageBuffer::merge([g, g, g])?
    } else {
        source.image.clone()
    };
    let mut matte = source.matte.clone();
    let mut landmarks = source.landmarks.clone();
    let mut gaze = source.gaze;
    let mut head_pose = source.head_pose;

    let flip_applied = protocol.flip_even_views && view_index.is_multiple_of(2);
    if flip_applied {
        let (i, l, g) = flip(&img, landmarks.as_ref(), gaze, &cfg.mirror_pairs);
        img = i;
        landmarks = l;
        gaze = g;
        head_pose = GazeAngles::new(head_pose.pitch, -head_pose.yaw);
        matte = matte.map(|m| m.flipped_horizontal());
    }

    let mut draw = rng_from(seed);
    let chosen: Vec<bool> = Method::ORDER.iter().map(|&m| draw.gen::<f64>() < protocol.probabilities.get(m)).collect();

    let r = &protocol.ranges;
    let mut applied = Vec::new();
    for (k, &m) in Method::ORDER.iter().enumerate() {
        if !chosen[k] {
            continue;
        }
        let mut rng = rng_from(mix(&[seed, k as u64 + 1]));
        let next = match m {
            Method::Background => match (&matte, assets.backgrounds.is_empty()) {
                (Some(mt), false) => {
                    let bg = &assets.backgrounds[rng.gen_range(0..assets.backgrounds.len())];
                    let bg = if bg.channels() == 1 { ImageBuffer::merge([bg, bg, bg])? } else { bg.clone() };
                    let bg = resize_bilinear(&bg, img.width(), img.height());
                    let mt = if mt.width() == img.width() && mt.height() == img.height() {
                        mt.clone()
                    } else {
                        resize_bilinear(mt, img.width(), img.height())
                    };
                    Some(background_replace(&img, &mt, &bg)?)
                }
                _ => None,
            },
            Method::Glasses => match (&landmarks, assets.glasses.is_empty()) {
                (Some(lm), false) => {
                    let params = GlassesParams::draw(&r.glasses, assets.backgrounds.len(), &mut rng);
                    let out = glasses_synthesis(
                        &img,
                        lm,
                        head_pose,
                        &assets.glasses,
                        &cfg.glasses_anchors,
                        &cfg.mirror_pairs,
                        &params,
                        &assets.backgrounds,
                    )?;
                    Some(out.image)
                }
                _ => None,
            },
            Method::Mask => match &landmarks {
                Some(lm) => {
                    let solid = assets.mask_textures.is_empty() || rng.gen::<f64>() < r.mask_solid_probability;
                    let fill = if solid {
                        MaskFill::Color([rng.gen(), rng.gen(), rng.gen()])
                    } else {
                        MaskFill::Texture(&assets.mask_textures[rng.gen_range(0..assets.mask_textures.len())])
                    };
                    Some(mask_synthesis(&img, lm, &cfg.mask_polygon, &fill)?)
                }
                None => None,
            },
            Method::Illumination => {
                let direction = rng.gen_range(0.0..360.0);
                let opacity = uniform(r.illumination_opacity, &mut rng);
                let tint = [rng.gen(), rng.gen(), rng.gen()];
                Some(illumination(&img, direction, opacity, tint)?)
            }
            Method::ColorJitter => {
                let gain = [0; 3].map(|_| uniform(r.color_gain, &mut rng) as f32);
                let offset = uniform(r.color_offset, &mut rng) as f32;
                Some(color_jitter(&img, gain, offset)?)
            }
            Method::Desaturation => Some(desaturate(&img, uniform(r.desaturation, &mut rng) as f32)?),
            Method::Blur => Some(blur(&img, uniform(r.blur_sigma, &mut rng))?),
            Method::SensorNoise => {
                let n = r.noise;
                Some(sensor_noise(&img, n.alpha_y, n.alpha_c, n.blotch, rng.gen())?)
            }
        };
        if let Some(out) = next {
            img = out;
            applied.push(m);
        }
    }
    img.clamp01();
    Ok(AugmentedView {
        view_index,
        seed,
        image: img,
        gaze,
        glasses_flag: applied.contains(&Method::Glasses),
        mask_flag: applied.contains(&Method::Mask),
        flip_applied,
        applied,
    })
}
