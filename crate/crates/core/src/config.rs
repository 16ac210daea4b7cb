//! Run configuration: a single JSON document holding every tunable
//! constant. The shipped defaults live in `config/default.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotate::AnnotateConfig;
use crate::augment::AugmentProtocol;
use crate::error::{Error, Result};
use crate::geometry::{GazeInterval, ScreenGeometry};
use crate::gridcodec::GridSpec;
use crate::landmarks::LandmarkConfig;
use crate::losses::LossWeights;
use crate::sampler::PlanOptions;

pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_CONFIG_JSON: &str = include_str!("../config/default.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    pub weights: LossWeights,
    /// Temperature of the sharpened softmax used to decode angles.
    pub softmax_tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Pairs averaged per calibration anchor.
    pub center_k: usize,
    pub repetitions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    pub pitch_tolerance_deg: f64,
    /// Yaw and roll tolerance.
    pub other_tolerance_deg: f64,
    /// Clamp angular predictions to the gaze interval before scoring.
    pub clamp_predictions: bool,
}

/// Asset directories; relative paths resolve against the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glasses_library: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backgrounds: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_textures: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub gaze_interval: GazeInterval,
    pub head_pose_interval: GazeInterval,
    pub bin_size_deg: f64,
    pub sampler: PlanOptions,
    pub augment: AugmentProtocol,
    pub losses: LossConfig,
    pub screen: ScreenGeometry,
    pub annotate: AnnotateConfig,
    pub landmarks: LandmarkConfig,
    pub calibration: CalibrationConfig,
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub paths: AssetPaths,
    #[serde(skip)]
    base_dir: Option<PathBuf>,
}

impl RunConfig {
    /// The defaults assembled from each module's own defaults.
    pub fn builtin() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            gaze_interval: GazeInterval::DEFAULT_GAZE,
            head_pose_interval: GazeInterval::DEFAULT_HEAD_POSE,
            bin_size_deg: 4.0,
            sampler: PlanOptions::default(),
            augment: AugmentProtocol::default(),
            losses: LossConfig { weights: LossWeights::default(), softmax_tau: 0.5 },
            screen: ScreenGeometry::default(),
            annotate: AnnotateConfig::default(),
            landmarks: LandmarkConfig::default(),
            calibration: CalibrationConfig { center_k: 3, repetitions: 9 },
            evaluation: EvaluationConfig {
                pitch_tolerance_deg: 10.0,
                other_tolerance_deg: 5.0,
                clamp_predictions: true,
            },
            paths: AssetPaths::default(),
            base_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(Error::Schema(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))),
            None => return Err(Error::Schema("schema_version missing".into())),
        }
        let cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn shipped() -> Self {
        Self::from_json(DEFAULT_CONFIG_JSON).expect("shipped config is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.gaze_interval.validate()?;
        self.head_pose_interval.validate()?;
        self.grid()?;
        if self.sampler.quota == 0 {
            return Err(Error::invalid("sampler.quota must be positive"));
        }
        self.augment.validate()?;
        self.losses.weights.validate()?;
        if !(self.losses.softmax_tau > 0.0) {
            return Err(Error::invalid("losses.softmax_tau must be positive"));
        }
        self.screen.validate()?;
        self.annotate.validate()?;
        self.landmarks.validate()?;
        if self.calibration.center_k == 0 || self.calibration.repetitions == 0 {
            return Err(Error::invalid("calibration.center_k and repetitions must be positive"));
        }
        let e = &self.evaluation;
        if !(e.pitch_tolerance_deg > 0.0 && e.other_tolerance_deg > 0.0) {
            return Err(Error::invalid("evaluation tolerances must be positive"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::from_bin_size(self.gaze_interval, self.bin_size_deg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_matches_builtin() {
        assert_eq!(RunConfig::shipped(), RunConfig::builtin());
    }

    #[test]
    fn shipped_constants() {
        let c = RunConfig::shipped();
        assert_eq!(c.grid().unwrap().total_bins(), 143);
        assert_eq!(c.sampler.quota * 143, 91_520);
        let w = c.losses.weights;
        assert_eq!((w.lambda_clf, w.lambda_seg, w.lambda_pitch), (0.1, 0.05, 0.005));
        assert_eq!((w.lambda_dataset, w.lambda_glasses, w.lambda_mask), (0.0025, 0.0025, 0.0025));
        assert_eq!((w.tau_supcon, c.losses.softmax_tau), (0.07, 0.5));
        let p = c.augment.probabilities;
        assert_eq!((p.color_jitter, p.background, p.blur, p.desaturation), (1.0, 0.95, 0.25, 0.1));
        assert_eq!((p.illumination, p.sensor_noise, p.glasses, p.mask), (0.5, 0.5, 0.5, 0.5));
        assert_eq!(c.augment.views_per_sample, 4);
        assert_eq!(c.head_pose_interval, GazeInterval::new(-30.0, 30.0, -30.0, 30.0).unwrap());
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG_JSON).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Schema(_))));
        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG_JSON).unwrap();
        v["augment"]["ranges"]["bogus"] = serde_json::json!(1);
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Schema(_))));
        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG_JSON).unwrap();
        v["schema_version"] = serde_json::json!(99);
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::Schema(_))));
        let mut v: serde_json::Value = serde_json::from_str(DEFAULT_CONFIG_JSON).unwrap();
        v["bin_size_deg"] = serde_json::json!(3.0);
        assert!(matches!(RunConfig::from_json(&v.to_string()), Err(Error::InvalidInput(_))));
    }
}
