use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GazeAngles;
use crate::gridcodec::{sharpened_softmax, BinProbabilities};
use crate::imgcore::BinaryMask;

pub const DICE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisSelection {
    Both,
    YawOnly,
}

/// Cross-entropy `-ln p[target]`, with the gradient with respect to the
/// (temperature-scaled) logits that produced `probs`: `p - onehot(target)`.
pub fn ce_loss(probs: &BinProbabilities, target: usize) -> Result<(f64, Vec<f64>)> {
    let p = probs.as_slice();
    if target >= p.len() {
        return Err(Error::OutOfRange(format!("target {target} out of range 0..{}", p.len())));
    }
    let mut grad = p.to_vec();
    grad[target] -= 1.0;
    Ok((-p[target].ln(), grad))
}

/// Cross-entropy of `softmax(logits / tau)`, with the gradient with respect
/// to the raw logits.
pub fn ce_from_logits(logits: &[f64], tau: f64, target: usize) -> Result<(f64, Vec<f64>)> {
    let probs = sharpened_softmax(logits, tau)?;
    if target >= logits.len() {
        return Err(Error::OutOfRange(format!("target {target} out of range 0..{}", logits.len())));
    }
    // log-softmax directly, so saturated probabilities stay finite.
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|l| ((l - max) / tau).exp()).sum::<f64>().ln();
    let loss = -((logits[target] - max) / tau - lse);
    let (_, g) = ce_loss(&probs, target)?;
    Ok((loss, g.into_iter().map(|v| v / tau).collect()))
}

/// Mean absolute error over the selected axes.
pub fn l1_loss(pred: GazeAngles, gt: GazeAngles, axes: AxisSelection) -> f64 {
    let dy = (pred.yaw - gt.yaw).abs();
    match axes {
        AxisSelection::Both => ((pred.pitch - gt.pitch).abs() + dy) / 2.0,
        AxisSelection::YawOnly => dy,
    }
}

/// Soft Dice loss `1 - (2 Σ p g + eps) / (Σ p + Σ g + eps)` and its gradient
/// with respect to `pred`.
pub fn dice_loss(pred: &[f64], gt: &BinaryMask, eps: f64) -> Result<(f64, Vec<f64>)> {
    if pred.len() != gt.data().len() {
        return Err(Error::dims(gt.data().len(), pred.len()));
    }
    let g: Vec<f64> = gt.data().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let inter: f64 = pred.iter().zip(&g).map(|(p, g)| p * g).sum();
    let total: f64 = pred.iter().sum::<f64>() + g.iter().sum::<f64>();
    let num = 2.0 * inter + eps;
    let den = total + eps;
    let grad = g.iter().map(|gk| -(2.0 * gk * den - num) / (den * den)).collect();
    Ok((1.0 - num / den, grad))
}
