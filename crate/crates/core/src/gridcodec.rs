//! Discretized gaze labels: per-axis binning of the gaze interval, centroid
//! decoding and temperature-sharpened softmax.
//!
//! Bin indices are 0-based: bin `i` on an axis covers
//! `[min + i*s, min + (i+1)*s)`, and its centroid is `min + (i + 1/2) s`.
//! The upper interval boundary folds into the last bin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GazeAngles, GazeInterval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Pitch,
    Yaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub interval: GazeInterval,
    pub n_pitch: usize,
    pub n_yaw: usize,
}

impl Default for GridSpec {
    /// 4° bins over the default gaze interval: 11 pitch × 13 yaw bins.
    fn default() -> Self {
        GridSpec::from_bin_size(GazeInterval::DEFAULT_GAZE, 4.0).expect("default grid")
    }
}

impl GridSpec {
    pub fn new(interval: GazeInterval, n_pitch: usize, n_yaw: usize) -> Result<Self> {
        let g = Self { interval, n_pitch, n_yaw };
        g.validate()?;
        Ok(g)
    }

    /// Derives bin counts from a bin size; both interval widths must be
    /// integer multiples of it.
    pub fn from_bin_size(interval: GazeInterval, bin_size: f64) -> Result<Self> {
        interval.validate()?;
        if !(bin_size > 0.0) {
            return Err(Error::invalid("bin size must be positive"));
        }
        let count = |width: f64| -> Result<usize> {
            let n = (width / bin_size).round();
            if (n * bin_size - width).abs() > 1e-9 * width.max(1.0) || n < 1.0 {
                return Err(Error::invalid(format!("interval width {width} is not a multiple of bin size {bin_size}")));
            }
            Ok(n as usize)
        };
        Self::new(interval, count(interval.pitch_width())?, count(interval.yaw_width())?)
    }

    pub fn validate(&self) -> Result<()> {
        self.interval.validate()?;
        if self.n_pitch == 0 || self.n_yaw == 0 {
            return Err(Error::invalid("grid needs at least one bin per axis"));
        }
        Ok(())
    }

    pub fn bins(&self, axis: Axis) -> usize {
        match axis {
            Axis::Pitch => self.n_pitch,
            Axis::Yaw => self.n_yaw,
        }
    }

    pub fn total_bins(&self) -> usize {
        self.n_pitch * self.n_yaw
    }

    pub fn bin_size(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Pitch => self.interval.pitch_width() / self.n_pitch as f64,
            Axis::Yaw => self.interval.yaw_width() / self.n_yaw as f64,
        }
    }

    fn axis_min(&self, axis: Axis) -> f64 {
        match axis {
            Axis::Pitch => self.interval.pitch_min,
            Axis::Yaw => self.interval.yaw_min,
        }
    }

    /// Flattened cell index, pitch-major.
    pub fn cell_index(&self, c_pitch: usize, c_yaw: usize) -> usize {
        c_pitch * self.n_yaw + c_yaw
    }

    pub fn discretize(&self, a: GazeAngles) -> Result<(usize, usize)> {
        if !a.is_finite() || !self.interval.contains(a) {
            return Err(Error::OutOfRange(format!("gaze ({}, {}) outside the grid interval", a.pitch, a.yaw)));
        }
        Ok((self.axis_bin(a.pitch, Axis::Pitch), self.axis_bin(a.yaw, Axis::Yaw)))
    }

    fn axis_bin(&self, v: f64, axis: Axis) -> usize {
        let idx = ((v - self.axis_min(axis)) / self.bin_size(axis)).floor() as usize;
        idx.min(self.bins(axis) - 1)
    }

    pub fn centroid(&self, index: usize, axis: Axis) -> Result<f64> {
        if index >= self.bins(axis) {
            return Err(Error::OutOfRange(format!("{axis:?} bin {index} out of range 0..{}", self.bins(axis))));
        }
        Ok(self.axis_min(axis) + (index as f64 + 0.5) * self.bin_size(axis))
    }

    pub fn centroids(&self, axis: Axis) -> Vec<f64> {
        (0..self.bins(axis)).map(|i| self.centroid(i, axis).expect("in range")).collect()
    }
}

/// A probability vector over the bins of one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BinProbabilities(Vec<f64>);

impl BinProbabilities {
    /// Accepts non-negative finite entries summing to 1 within `1e-4`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("empty probability vector"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("probabilities must be finite and non-negative"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-4 {
            return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self(probs))
    }

    pub fn one_hot(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::OutOfRange(format!("one-hot index {k} out of range 0..{n}")));
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Ok(Self(v))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Expected angle under `p` over the bin centroids of `axis`.
pub fn decode_expectation(p: &BinProbabilities, axis: Axis, grid: &GridSpec) -> Result<f64> {
    if p.len() != grid.bins(axis) {
        return Err(Error::dims(grid.bins(axis), p.len()));
    }
    Ok(p.as_slice().iter().zip(grid.centroids(axis)).map(|(pi, c)| pi * c).sum())
}

/// `softmax(logits / tau)` with the maximum subtracted first.
pub fn sharpened_softmax(logits: &[f64], tau: f64) -> Result<BinProbabilities> {
    if !(tau > 0.0) {
        return Err(Error::invalid("softmax temperature must be positive"));
    }
    if logits.is_empty() || logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("logits must be finite and non-empty"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| ((l - max) / tau).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(BinProbabilities(exps.into_iter().map(|e| e / sum).collect()))
}
