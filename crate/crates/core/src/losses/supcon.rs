//! Supervised contrastive loss over a multi-view batch.
//!
//! For anchors `i` with positive set `P(i)` (from a [`PairMask`]):
//!
//! `L = Σ_i -1/|P(i)| Σ_{p∈P(i)} log( exp(z_i·z_p/τ) / Σ_{q≠i} exp(z_i·z_q/τ) )`
//!
//! Anchors without positives contribute nothing. Rows are normalized
//! internally and the gradient is taken with respect to the un-normalized
//! input rows.

use super::{FeatureMatrix, PairMask};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SupConOutput {
    pub loss: f64,
    pub grad: FeatureMatrix,
}

pub fn supcon_loss(features: &FeatureMatrix, mask: &PairMask, tau: f64) -> Result<SupConOutput> {
    let n = features.rows();
    let d = features.cols();
    if n < 2 {
        return Err(Error::invalid(format!("contrastive loss needs at least 2 rows, got {n}")));
    }
    if mask.len() != n {
        return Err(Error::dims(n, mask.len()));
    }
    if !(tau > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    let z = features.normalized_rows()?;

    let mut sim = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let s: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum::<f64>() / tau;
            sim[i * n + j] = s;
            sim[j * n + i] = s;
        }
    }

    // coef[i][q] = dL/d(z_i·z_q) for the anchor-i term.
    let mut coef = vec![0.0; n * n];
    let mut loss = 0.0;
    for i in 0..n {
        let positives: Vec<usize> = mask.positives(i).collect();
        if positives.is_empty() {
            continue;
        }
        let row = &sim[i * n..(i + 1) * n];
        let max = (0..n).filter(|&q| q != i).map(|q| row[q]).fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = (0..n).filter(|&q| q != i).map(|q| (row[q] - max).exp()).sum();
        let log_denom = max + denom.ln();
        let inv_p = 1.0 / positives.len() as f64;
        loss -= inv_p * positives.iter().map(|&p| row[p] - log_denom).sum::<f64>();

        for q in 0..n {
            if q != i {
                coef[i * n + q] += (row[q] - log_denom).exp() / tau;
            }
        }
        for &p in &positives {
            coef[i * n + p] -= inv_p / tau;
        }
    }

    // Gradient with respect to the normalized rows.
    let mut gz = FeatureMatrix::zeros(n, d);
    for i in 0..n {
        for q in 0..n {
            let c = coef[i * n + q];
            if c == 0.0 {
                continue;
            }
            for k in 0..d {
                let zq = z.row(q)[k];
                let zi = z.row(i)[k];
                gz.row_mut(i)[k] += c * zq;
                gz.row_mut(q)[k] += c * zi;
            }
        }
    }

    // Chain through z = x / |x|: dL/dx = (g - (g·z) z) / |x|.
    let mut grad = FeatureMatrix::zeros(n, d);
    for i in 0..n {
        let x = features.row(i);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let g = gz.row(i);
        let zi = z.row(i);
        let proj: f64 = g.iter().zip(zi).map(|(a, b)| a * b).sum();
        for k in 0..d {
            grad.row_mut(i)[k] = (g[k] - proj * zi[k]) / norm;
        }
    }

    Ok(SupConOutput { loss, grad })
}
