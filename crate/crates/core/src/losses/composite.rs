//! The weighted multi-task objective.
//!
//! `L = L_reg + λ_clf L_clf + λ_seg L_seg + λ_D L_D + λ_φ L_φ + λ_g L_g + λ_m L_m`
//!
//! `L_reg` and `L_clf` are sums of per-axis terms, each averaged over all
//! rows of the batch. Rows from pitch-attenuated datasets contribute zero
//! to the pitch terms; their yaw terms are always kept. `L_seg` is the mean
//! Dice loss over the segmentation targets present in the batch.

use serde::Serialize;

use super::masks::{accessory_mask, dataset_mask, pitch_mask};
use super::pointwise::{ce_from_logits, dice_loss, DICE_EPS};
use super::supcon::supcon_loss;
use super::{Accessory, FeatureMatrix, LossWeights, RowMeta};
use crate::error::{Error, Result};
use crate::geometry::clamp_to_interval;
use crate::gridcodec::{decode_expectation, sharpened_softmax, Axis, GridSpec};
use crate::imgcore::BinaryMask;

/// Predicted soft mask paired with its target.
#[derive(Debug, Clone)]
pub struct SegPair {
    pub pred: Vec<f64>,
    pub target: BinaryMask,
}

/// Network outputs for one row.
#[derive(Debug, Clone)]
pub struct RowOutput {
    pub pitch_logits: Vec<f64>,
    pub yaw_logits: Vec<f64>,
    /// Valid segmentation targets only; rows without labels leave this empty.
    pub seg: Vec<SegPair>,
}

/// Projection-head features for each contrastive term; absent heads are skipped.
#[derive(Debug, Clone, Default)]
pub struct ContrastiveHeads {
    pub dataset: Option<FeatureMatrix>,
    pub pitch: Option<FeatureMatrix>,
    pub glasses: Option<FeatureMatrix>,
    pub mask: Option<FeatureMatrix>,
}

#[derive(Debug, Clone)]
pub struct CompositeBatch {
    pub meta: Vec<RowMeta>,
    pub outputs: Vec<RowOutput>,
    pub heads: ContrastiveHeads,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossTerm {
    RegPitch,
    RegYaw,
    ClfPitch,
    ClfYaw,
    Seg,
    SupConDataset,
    SupConPitch,
    SupConGlasses,
    SupConMask,
}

/// Unweighted term values and the weighted total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub terms: Vec<(LossTerm, f64)>,
    pub weights: LossWeights,
    pub total: f64,
}

impl LossBreakdown {
    pub fn raw(&self, term: LossTerm) -> f64 {
        self.terms.iter().find(|(t, _)| *t == term).map(|(_, v)| *v).unwrap_or(0.0)
    }

    pub fn weight(&self, term: LossTerm) -> f64 {
        let w = &self.weights;
        match term {
            LossTerm::RegPitch | LossTerm::RegYaw => 1.0,
            LossTerm::ClfPitch | LossTerm::ClfYaw => w.lambda_clf,
            LossTerm::Seg => w.lambda_seg,
            LossTerm::SupConDataset => w.lambda_dataset,
            LossTerm::SupConPitch => w.lambda_pitch,
            LossTerm::SupConGlasses => w.lambda_glasses,
            LossTerm::SupConMask => w.lambda_mask,
        }
    }

    /// `(term, weight × value)` for every term.
    pub fn weighted_terms(&self) -> Vec<(LossTerm, f64)> {
        self.terms.iter().map(|&(t, v)| (t, self.weight(t) * v)).collect()
    }
}

pub fn composite_loss(
    batch: &CompositeBatch,
    weights: &LossWeights,
    grid: &GridSpec,
    softmax_tau: f64,
) -> Result<LossBreakdown> {
    weights.validate()?;
    let n = batch.meta.len();
    if batch.outputs.len() != n {
        return Err(Error::dims(n, batch.outputs.len()));
    }
    if n == 0 {
        return Err(Error::invalid("empty batch"));
    }

    let (mut reg_p, mut reg_y, mut clf_p, mut clf_y) = (0.0, 0.0, 0.0, 0.0);
    let mut seg_sum = 0.0;
    let mut seg_count = 0usize;
    for (meta, out) in batch.meta.iter().zip(&batch.outputs) {
        let gt = clamp_to_interval(meta.gaze(), &grid.interval);
        let (c_p, c_y) = grid.discretize(gt)?;

        let pred_y = decode_expectation(&sharpened_softmax(&out.yaw_logits, softmax_tau)?, Axis::Yaw, grid)?;
        reg_y += (pred_y - gt.yaw).abs();
        clf_y += ce_from_logits(&out.yaw_logits, softmax_tau, c_y)?.0;

        if !meta.dataset.pitch_attenuated() {
            let pred_p = decode_expectation(&sharpened_softmax(&out.pitch_logits, softmax_tau)?, Axis::Pitch, grid)?;
            reg_p += (pred_p - gt.pitch).abs();
            clf_p += ce_from_logits(&out.pitch_logits, softmax_tau, c_p)?.0;
        }

        for s in &out.seg {
            seg_sum += dice_loss(&s.pred, &s.target, DICE_EPS)?.0;
            seg_count += 1;
        }
    }
    let nf = n as f64;
    let seg = if seg_count > 0 { seg_sum / seg_count as f64 } else { 0.0 };

    let tau = weights.tau_supcon;
    let contrast = |head: &Option<FeatureMatrix>, mask: &dyn Fn() -> super::PairMask| -> Result<f64> {
        match head {
            Some(f) if f.rows() >= 2 => {
                if f.rows() != n {
                    return Err(Error::dims(n, f.rows()));
                }
                Ok(supcon_loss(f, &mask(), tau)?.loss)
            }
            _ => Ok(0.0),
        }
    };
    let s_pitch = grid.bin_size(Axis::Pitch);
    let sc_dataset = contrast(&batch.heads.dataset, &|| dataset_mask(&batch.meta, grid))?;
    let sc_pitch = contrast(&batch.heads.pitch, &|| pitch_mask(&batch.meta, s_pitch))?;
    let sc_glasses = contrast(&batch.heads.glasses, &|| accessory_mask(&batch.meta, Accessory::Glasses))?;
    let sc_mask = contrast(&batch.heads.mask, &|| accessory_mask(&batch.meta, Accessory::Mask))?;

    let mut breakdown = LossBreakdown {
        terms: vec![
            (LossTerm::RegPitch, reg_p / nf),
            (LossTerm::RegYaw, reg_y / nf),
            (LossTerm::ClfPitch, clf_p / nf),
            (LossTerm::ClfYaw, clf_y / nf),
            (LossTerm::Seg, seg),
            (LossTerm::SupConDataset, sc_dataset),
            (LossTerm::SupConPitch, sc_pitch),
            (LossTerm::SupConGlasses, sc_glasses),
            (LossTerm::SupConMask, sc_mask),
        ],
        weights: *weights,
        total: 0.0,
    };
    breakdown.total = breakdown.weighted_terms().iter().map(|(_, v)| v).sum();
    Ok(breakdown)
}
