//! Per-person linear correction of screen-space gaze predictions:
//! `corrected = slope * pred + intercept` independently per axis.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScreenGeometry;
use crate::predictions::PredictionRow;
use crate::seeding::{hash_str, mix, rng_from};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazePointPair {
    pub sample_id: String,
    pub pred: [f64; 2],
    pub gt: [f64; 2],
    #[serde(default)]
    pub subject: String,
    #[serde(default)]
    pub session: String,
}

impl GazePointPair {
    pub fn from_row(row: &PredictionRow) -> Result<Self> {
        let missing = || Error::Schema(format!("row {}: screen-space columns missing", row.sample_id));
        Ok(Self {
            sample_id: row.sample_id.clone(),
            pred: row.pred_mm().ok_or_else(missing)?,
            gt: row.gt_mm().ok_or_else(missing)?,
            subject: row.subject.clone().unwrap_or_default(),
            session: row.session.clone().unwrap_or_default(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisModel {
    pub slope: f64,
    /// Millimeters.
    pub intercept: f64,
}

impl AxisModel {
    pub const IDENTITY: AxisModel = AxisModel { slope: 1.0, intercept: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationModel {
    pub x: AxisModel,
    pub y: AxisModel,
}

impl CalibrationModel {
    pub const IDENTITY: CalibrationModel = CalibrationModel { x: AxisModel::IDENTITY, y: AxisModel::IDENTITY };

    pub fn validate(&self) -> Result<()> {
        for a in [self.x, self.y] {
            if !a.slope.is_finite() || a.slope == 0.0 || !a.intercept.is_finite() {
                return Err(Error::invalid("calibration slopes must be finite and nonzero"));
            }
        }
        Ok(())
    }

    pub fn apply(&self, pred: [f64; 2]) -> [f64; 2] {
        [self.x.slope * pred[0] + self.x.intercept, self.y.slope * pred[1] + self.y.intercept]
    }
}

/// The center point followed by the four screen corners.
pub fn calibration_anchors(screen: &ScreenGeometry) -> [[f64; 2]; 5] {
    let [w, h] = screen.screen_size_mm;
    [[w / 2.0, h / 2.0], [0.0, 0.0], [w, 0.0], [0.0, h], [w, h]]
}

/// Averages the `k` pairs whose ground truth lies closest to `target`;
/// equal distances keep input order.
pub fn select_center_points(pairs: &[GazePointPair], target: [f64; 2], k: usize) -> Result<GazePointPair> {
    if k == 0 || pairs.len() < k {
        return Err(Error::invalid(format!("need {k} calibration pairs, have {}", pairs.len())));
    }
    let dist = |p: &GazePointPair| (p.gt[0] - target[0]).hypot(p.gt[1] - target[1]);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| dist(&pairs[a]).total_cmp(&dist(&pairs[b])));
    let chosen = &order[..k];
    let mean = |f: &dyn Fn(&GazePointPair) -> f64| chosen.iter().map(|&i| f(&pairs[i])).sum::<f64>() / k as f64;
    let first = &pairs[chosen[0]];
    Ok(GazePointPair {
        sample_id: chosen.iter().map(|&i| pairs[i].sample_id.as_str()).collect::<Vec<_>>().join("+"),
        pred: [mean(&|p| p.pred[0]), mean(&|p| p.pred[1])],
        gt: [mean(&|p| p.gt[0]), mean(&|p| p.gt[1])],
        subject: first.subject.clone(),
        session: first.session.clone(),
    })
}

/// One averaged pair per anchor: center only for 1 point, center and
/// corners for 5 points.
pub fn select_anchor_points(pairs: &[GazePointPair], anchors: &[[f64; 2]], k: usize) -> Result<Vec<GazePointPair>> {
    anchors.iter().map(|&a| select_center_points(pairs, a, k)).collect()
}

pub fn fit_one_point(p: &GazePointPair) -> CalibrationModel {
    CalibrationModel {
        x: AxisModel { slope: 1.0, intercept: p.gt[0] - p.pred[0] },
        y: AxisModel { slope: 1.0, intercept: p.gt[1] - p.pred[1] },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NPointFit {
    pub model: CalibrationModel,
    /// Axes (0 = x, 1 = y) that fell back to an intercept-only model.
    pub fallback_axes: Vec<usize>,
}

fn fit_axis(xs: &[f64], ys: &[f64]) -> (AxisModel, bool) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let scale = xs.iter().map(|x| x * x).sum::<f64>().max(1.0);
    let slope = sxy / sxx;
    if sxx <= 1e-12 * scale || !slope.is_finite() || slope.abs() < 1e-12 {
        return (AxisModel { slope: 1.0, intercept: my - mx }, true);
    }
    (AxisModel { slope, intercept: my - slope * mx }, false)
}

/// Ordinary least squares per axis. An axis whose predictions have no
/// spread falls back to an intercept-only correction.
pub fn fit_npoint(pairs: &[GazePointPair]) -> Result<NPointFit> {
    if pairs.len() < 2 {
        return Err(Error::invalid(format!("n-point calibration needs at least 2 pairs, have {}", pairs.len())));
    }
    let mut axes = [AxisModel::IDENTITY; 2];
    let mut fallback_axes = Vec::new();
    for (a, slot) in axes.iter_mut().enumerate() {
        let xs: Vec<f64> = pairs.iter().map(|p| p.pred[a]).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.gt[a]).collect();
        let (m, fell_back) = fit_axis(&xs, &ys);
        if fell_back {
            log::warn!("calibration axis {} has no prediction spread; fitting intercept only", ["x", "y"][a]);
            fallback_axes.push(a);
        }
        *slot = m;
    }
    Ok(NPointFit { model: CalibrationModel { x: axes[0], y: axes[1] }, fallback_axes })
}

/// One-point rule for a single pair, least squares otherwise.
pub fn fit_points(pairs: &[GazePointPair]) -> Result<CalibrationModel> {
    match pairs {
        [] => Err(Error::invalid("no calibration pairs")),
        [p] => Ok(fit_one_point(p)),
        _ => Ok(fit_npoint(pairs)?.model),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ScreenError {
    pub d_x: f64,
    pub d_y: f64,
    pub euclidean: f64,
}

/// Mean absolute per-axis and mean Euclidean error after applying `model`.
pub fn evaluate_model(model: &CalibrationModel, pairs: &[GazePointPair]) -> ScreenError {
    let n = pairs.len().max(1) as f64;
    let mut e = ScreenError::default();
    for p in pairs {
        let c = model.apply(p.pred);
        let (dx, dy) = (c[0] - p.gt[0], c[1] - p.gt[1]);
        e.d_x += dx.abs() / n;
        e.d_y += dy.abs() / n;
        e.euclidean += dx.hypot(dy) / n;
    }
    e
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolReport {
    pub n_calibration: usize,
    pub repetitions: usize,
    /// Median over repetitions, per subject.
    pub per_subject: BTreeMap<String, ScreenError>,
    /// Mean of the per-subject medians.
    pub mean: ScreenError,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Random-draw calibration: per subject and repetition, fit on `n_c` random
/// pairs and evaluate on the rest.
pub fn mpii_protocol(
    pairs_by_subject: &BTreeMap<String, Vec<GazePointPair>>,
    n_c: usize,
    reps: usize,
    seed: u64,
) -> Result<ProtocolReport> {
    if n_c == 0 || reps == 0 {
        return Err(Error::invalid("n_c and reps must be positive"));
    }
    if pairs_by_subject.is_empty() {
        return Err(Error::invalid("no subjects"));
    }
    let mut per_subject = BTreeMap::new();
    for (subject, pairs) in pairs_by_subject {
        if pairs.len() <= n_c {
            return Err(Error::invalid(format!("subject {subject} has {} pairs; need more than {n_c}", pairs.len())));
        }
        let mut runs = Vec::with_capacity(reps);
        for r in 0..reps {
            let mut rng = rng_from(mix(&[seed, hash_str(subject), r as u64]));
            let mut picked = sample(&mut rng, pairs.len(), n_c).into_vec();
            picked.sort_unstable();
            let calib: Vec<GazePointPair> = picked.iter().map(|&i| pairs[i].clone()).collect();
            let test: Vec<GazePointPair> =
                (0..pairs.len()).filter(|i| picked.binary_search(i).is_err()).map(|i| pairs[i].clone()).collect();
            runs.push(evaluate_model(&fit_points(&calib)?, &test));
        }
        per_subject.insert(
            subject.clone(),
            ScreenError {
                d_x: median(runs.iter().map(|e| e.d_x).collect()),
                d_y: median(runs.iter().map(|e| e.d_y).collect()),
                euclidean: median(runs.iter().map(|e| e.euclidean).collect()),
            },
        );
    }
    let n = per_subject.len() as f64;
    let mean = per_subject.values().fold(ScreenError::default(), |acc, e| ScreenError {
        d_x: acc.d_x + e.d_x / n,
        d_y: acc.d_y + e.d_y / n,
        euclidean: acc.euclidean + e.euclidean / n,
    });
    Ok(ProtocolReport { n_calibration: n_c, repetitions: reps, per_subject, mean })
}

/// Groups pairs by subject, or by `(subject, session)` when `per_session`.
pub fn group_pairs(pairs: &[GazePointPair], per_session: bool) -> BTreeMap<String, Vec<GazePointPair>> {
    let mut out: BTreeMap<String, Vec<GazePointPair>> = BTreeMap::new();
    for p in pairs {
        let key = if per_session { format!("{}/{}", p.subject, p.session) } else { p.subject.clone() };
        out.entry(key).or_default().push(p.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn pair(id: usize, pred: [f64; 2], gt: [f64; 2]) -> GazePointPair {
        GazePointPair { sample_id: format!("s{id}"), pred, gt, subject: "p".into(), session: "a".into() }
    }

    #[test]
    fn center_selection() {
        let pairs =
            vec![pair(0, [1.0, 1.0], [10.0, 0.0]), pair(1, [2.0, 2.0], [0.0, 10.0]), pair(2, [3.0, 3.0], [5.0, 5.0])];
        let c = select_center_points(&pairs, [0.0, 0.0], 3).unwrap();
        assert_eq!(c.pred, [2.0, 2.0]);
        assert_eq!(c.gt, [5.0, 5.0]);
        let two = select_center_points(&pairs, [0.0, 0.0], 2).unwrap();
        assert_eq!(two.sample_id, "s2+s0");
        assert!(select_center_points(&pairs, [0.0, 0.0], 4).is_err());
    }

    #[test]
    fn one_point_examples() {
        let p = pair(0, [10.0, 5.0], [0.0, 0.0]);
        let m = fit_one_point(&p);
        assert_eq!((m.x.intercept, m.y.intercept), (-10.0, -5.0));
        assert_eq!(m.apply(p.pred), p.gt);
        assert_eq!(fit_one_point(&pair(0, [3.0, 4.0], [3.0, 4.0])), CalibrationModel::IDENTITY);
        assert_eq!(CalibrationModel::IDENTITY.apply([7.5, -2.0]), [7.5, -2.0]);
    }

    #[test]
    fn npoint_exact_line() {
        let pairs: Vec<_> = (0..6)
            .map(|i| {
                let x = i as f64 * 7.0 - 10.0;
                pair(i, [x, -x], [2.0 * x + 3.0, 0.5 * -x - 1.0])
            })
            .collect();
        let fit = fit_npoint(&pairs).unwrap();
        assert!((fit.model.x.slope - 2.0).abs() < 1e-9 && (fit.model.x.intercept - 3.0).abs() < 1e-9);
        assert!((fit.model.y.slope - 0.5).abs() < 1e-9 && (fit.model.y.intercept + 1.0).abs() < 1e-9);
        assert!(fit.fallback_axes.is_empty());
        let two = fit_npoint(&pairs[..2]).unwrap().model;
        for p in &pairs[..2] {
            let c = two.apply(p.pred);
            assert!((c[0] - p.gt[0]).abs() < 1e-9 && (c[1] - p.gt[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn npoint_degenerate_fallback() {
        let pairs = vec![pair(0, [4.0, 1.0], [1.0, 2.0]), pair(1, [4.0, 2.0], [3.0, 4.0])];
        let fit = fit_npoint(&pairs).unwrap();
        assert_eq!(fit.fallback_axes, vec![0]);
        assert_eq!(fit.model.x, AxisModel { slope: 1.0, intercept: -2.0 });
        fit.model.validate().unwrap();
    }

    fn biased_subjects(
        n_subjects: usize,
        per: usize,
        slope_one: bool,
        noise: f64,
        seed: u64,
    ) -> BTreeMap<String, Vec<GazePointPair>> {
        let mut rng = rng_from(seed);
        let normal = Normal::new(0.0, noise.max(1e-300)).unwrap();
        (0..n_subjects)
            .map(|s| {
                let (ax, ay) = if slope_one { (1.0, 1.0) } else { (rng.gen_range(0.7..1.3), rng.gen_range(0.7..1.3)) };
                let (bx, by) = (rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
                let pairs = (0..per)
                    .map(|i| {
                        let gt = [rng.gen_range(0.0..250.0), rng.gen_range(0.0..170.0)];
                        let mut pred = [(gt[0] - bx) / ax, (gt[1] - by) / ay];
                        if noise > 0.0 {
                            pred[0] += normal.sample(&mut rng);
                            pred[1] += normal.sample(&mut rng);
                        }
                        pair(i, pred, gt)
                    })
                    .collect();
                (format!("p{s:02}"), pairs)
            })
            .collect()
    }

    #[test]
    fn protocol_recovers_exact_bias() {
        let subjects = biased_subjects(5, 40, false, 0.0, 1);
        let r = mpii_protocol(&subjects, 3, 9, 7).unwrap();
        assert!(r.mean.euclidean < 1e-9, "{:?}", r.mean);
        let one = biased_subjects(5, 40, true, 0.0, 2);
        assert!(mpii_protocol(&one, 1, 9, 7).unwrap().mean.euclidean < 1e-9);
        assert_eq!(mpii_protocol(&subjects, 3, 9, 7).unwrap(), r);
        assert!(mpii_protocol(&subjects, 40, 9, 7).is_err());
    }

    #[test]
    fn error_non_increasing_in_n() {
        let subjects = biased_subjects(8, 60, false, 5.0, 3);
        let errs: Vec<f64> =
            [2, 5, 10, 20].iter().map(|&n| mpii_protocol(&subjects, n, 9, 11).unwrap().mean.euclidean).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{errs:?}");
    }

    proptest! {
        #[test]
        fn residuals_orthogonal(pts in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30)) {
            let pairs: Vec<_> = pts.iter().enumerate().map(|(i, &(x, y))| pair(i, [x, y], [y, x])).collect();
            let fit = fit_npoint(&pairs).unwrap();
            for a in 0..2 {
                if fit.fallback_axes.contains(&a) {
                    continue;
                }
                let m = if a == 0 { fit.model.x } else { fit.model.y };
                let r: Vec<f64> = pairs.iter().map(|p| p.gt[a] - (m.slope * p.pred[a] + m.intercept)).collect();
                let dot: f64 = r.iter().zip(&pairs).map(|(r, p)| r * p.pred[a]).sum();
                let sum: f64 = r.iter().sum();
                let scale: f64 = pairs.iter().map(|p| p.pred[a].abs() * p.gt[a].abs()).sum::<f64>().max(1.0);
                prop_assert!(dot.abs() / scale < 1e-9 && sum.abs() / scale < 1e-9);
            }
        }

        #[test]
        fn one_point_maps_calibration_point(px in -500.0f64..500.0, py in -500.0f64..500.0, gx in -500.0f64..500.0, gy in -500.0f64..500.0) {
            let p = pair(0, [px, py], [gx, gy]);
            let c = fit_one_point(&p).apply(p.pred);
            prop_assert!((c[0] - gx).abs() < 1e-9 && (c[1] - gy).abs() < 1e-9);
        }
    }
}
