//! Loss kernels for the multi-task gaze objective, with analytic gradients.

mod composite;
mod dump;
mod gradcheck;
mod masks;
mod pointwise;
mod supcon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GazeAngles;
use crate::manifest::DatasetId;

pub use composite::{composite_loss, CompositeBatch, ContrastiveHeads, LossBreakdown, LossTerm, RowOutput, SegPair};
pub use dump::{read_feature_dump, write_feature_dump, DumpHeader};
pub use gradcheck::grad_check;
pub use masks::{build_accessory_mask, build_dataset_mask, build_pitch_mask, Accessory};
pub use pointwise::{ce_from_logits, ce_loss, dice_loss, l1_loss, AxisSelection, DICE_EPS};
pub use supcon::{supcon_loss, SupConOutput};

/// Dense row-major `rows × cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::dims(rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy with every row scaled to unit length.
    pub fn normalized_rows(&self) -> Result<FeatureMatrix> {
        let mut out = self.clone();
        for i in 0..self.rows {
            let row = out.row_mut(i);
            let n = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(n > 1e-12) || !n.is_finite() {
                return Err(Error::Degenerate(format!("feature row {i} has zero norm")));
            }
            row.iter_mut().for_each(|v| *v /= n);
        }
        Ok(out)
    }
}

/// Per-row metadata of a feature batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowMeta {
    pub sample_id: String,
    pub view_index: usize,
    #[serde(rename = "dataset_id")]
    pub dataset: DatasetId,
    #[serde(rename = "subject_id")]
    pub subject: String,
    pub glasses: bool,
    pub mask: bool,
    pub pitch: f64,
    pub yaw: f64,
    pub flip: bool,
}

impl RowMeta {
    pub fn gaze(&self) -> GazeAngles {
        GazeAngles::new(self.pitch, self.yaw)
    }
}

/// Unit-norm embeddings with per-row metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBatch {
    features: FeatureMatrix,
    meta: Vec<RowMeta>,
}

impl FeatureBatch {
    pub const NORM_TOLERANCE: f64 = 1e-6;

    pub fn new(features: FeatureMatrix, meta: Vec<RowMeta>) -> Result<Self> {
        if features.rows() != meta.len() {
            return Err(Error::dims(features.rows(), meta.len()));
        }
        for i in 0..features.rows() {
            let n = features.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            if (n - 1.0).abs() > Self::NORM_TOLERANCE {
                return Err(Error::invalid(format!("feature row {i} has norm {n}, expected 1")));
            }
        }
        Ok(Self { features, meta })
    }

    /// Normalizes rows before validating.
    pub fn from_raw(features: FeatureMatrix, meta: Vec<RowMeta>) -> Result<Self> {
        Self::new(features.normalized_rows()?, meta)
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn meta(&self) -> &[RowMeta] {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }
}

/// Symmetric boolean positive-pair matrix with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMask {
    n: usize,
    data: Vec<bool>,
}

impl PairMask {
    pub fn new(n: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::dims(n * n, data.len()));
        }
        for i in 0..n {
            if data[i * n + i] {
                return Err(Error::invalid(format!("pair mask has diagonal entry {i}")));
            }
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::invalid(format!("pair mask asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Builds from a pairwise predicate evaluated for `i < j`.
    pub fn from_pairs(n: usize, mut positive: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = vec![false; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                if positive(i, j) {
                    data[i * n + j] = true;
                    data[j * n + i] = true;
                }
            }
        }
        Self { n, data }
    }

    pub fn empty(n: usize) -> Self {
        Self { n, data: vec![false; n * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.n + j]
    }

    pub fn positives(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.get(i, j))
    }

    pub fn count_pairs(&self) -> usize {
        self.data.iter().filter(|&&b| b).count() / 2
    }

    pub fn is_symmetric_zero_diagonal(&self) -> bool {
        Self::new(self.n, self.data.clone()).is_ok()
    }
}

/// Weights of the composite objective and the contrastive temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_clf: f64,
    pub lambda_seg: f64,
    pub lambda_dataset: f64,
    pub lambda_pitch: f64,
    pub lambda_glasses: f64,
    pub lambda_mask: f64,
    pub tau_supcon: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_clf: 0.1,
            lambda_seg: 0.05,
            lambda_dataset: 0.0025,
            lambda_pitch: 0.005,
            lambda_glasses: 0.0025,
            lambda_mask: 0.0025,
            tau_supcon: 0.07,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let lambdas = [
            self.lambda_clf,
            self.lambda_seg,
            self.lambda_dataset,
            self.lambda_pitch,
            self.lambda_glasses,
            self.lambda_mask,
        ];
        if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::invalid("loss weights must be finite and non-negative"));
        }
        if !(self.tau_supcon > 0.0) {
            return Err(Error::invalid("contrastive temperature must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_mask_validation() {
        assert!(PairMask::new(2, vec![true, false, false, false]).is_err());
        assert!(PairMask::new(2, vec![false, true, false, false]).is_err());
        assert!(PairMask::new(2, vec![false, true, true, false]).is_ok());
    }

    #[test]
    fn batch_requires_unit_rows() {
        let meta = |i: usize| RowMeta {
            sample_id: format!("s{i}"),
            view_index: 0,
            dataset: DatasetId::X,
            subject: "p".into(),
            glasses: false,
            mask: false,
            pitch: 0.0,
            yaw: 0.0,
            flip: false,
        };
        let f = FeatureMatrix::new(2, 2, vec![3.0, 4.0, 0.0, 2.0]).unwrap();
        assert!(FeatureBatch::new(f.clone(), vec![meta(0), meta(1)]).is_err());
        let b = FeatureBatch::from_raw(f, vec![meta(0), meta(1)]).unwrap();
        assert_eq!(b.features().row(0), &[0.6, 0.8]);
    }

    #[test]
    fn default_weights() {
        let w = LossWeights::default();
        assert_eq!(w.lambda_clf, 0.1);
        assert_eq!(w.lambda_seg, 0.05);
        assert_eq!(w.lambda_pitch, 0.005);
        assert_eq!(w.lambda_dataset, 0.0025);
        assert_eq!(w.tau_supcon, 0.07);
        w.validate().unwrap();
    }
}
