//! Error metrics over externally produced predictions: screen-space errors
//! grouped by capture session, angular errors, and prediction bias on
//! zero-gaze triplets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibrate::{GazePointPair, ScreenError};
use crate::error::{Error, Result};
use crate::geometry::{angular_error_angles, clamp_to_interval, GazeAngles, GazeInterval};
use crate::predictions::PredictionRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Session {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
}

impl Session {
    pub const ALL: [Session; 9] =
        [Session::A, Session::B, Session::C, Session::D, Session::E, Session::F, Session::G, Session::H, Session::I];
}

impl FromStr for Session {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let idx = match s.trim().to_ascii_lowercase().as_str() {
            "a" => 0,
            "b" => 1,
            "c" => 2,
            "d" => 3,
            "e" => 4,
            "f" => 5,
            "g" => 6,
            "h" => 7,
            "i" => 8,
            _ => return Err(Error::Schema(format!("unknown session tag {s:?}"))),
        };
        Ok(Session::ALL[idx])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Overall,
    Ideal,
    SideLit,
    Glasses,
    Masks,
}

impl Group {
    pub const ALL: [Group; 5] = [Group::Overall, Group::Ideal, Group::SideLit, Group::Glasses, Group::Masks];

    pub fn contains(self, s: Session) -> bool {
        use Session::*;
        match self {
            Group::Overall => true,
            Group::Ideal => matches!(s, A | B),
            Group::SideLit => matches!(s, C | D),
            Group::Glasses => matches!(s, E | F),
            Group::Masks => matches!(s, G | H),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Group::Overall => "Overall",
            Group::Ideal => "Ideal",
            Group::SideLit => "Side-Lit",
            Group::Glasses => "Glasses",
            Group::Masks => "Masks",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Mean absolute per-axis and mean Euclidean error between predicted and
/// ground-truth points. `None` for an empty input.
pub fn screen_errors(pairs: &[GazePointPair]) -> Option<ScreenError> {
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    let mut e = ScreenError::default();
    for p in pairs {
        let (dx, dy) = (p.pred[0] - p.gt[0], p.pred[1] - p.gt[1]);
        e.d_x += dx.abs();
        e.d_y += dy.abs();
        e.euclidean += dx.hypot(dy);
    }
    Some(ScreenError { d_x: e.d_x / n, d_y: e.d_y / n, euclidean: e.euclidean / n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRow {
    pub group: Group,
    pub count: usize,
    pub error: ScreenError,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct GroupReport {
    pub rows: Vec<GroupRow>,
    /// Groups without records.
    pub omitted: Vec<Group>,
    pub excluded_subjects: Vec<String>,
}

/// Subjects that lack at least one of the nine sessions.
pub fn reduced_session_subjects(pairs: &[GazePointPair]) -> Result<BTreeSet<String>> {
    let mut seen: BTreeMap<&str, BTreeSet<Session>> = BTreeMap::new();
    for p in pairs {
        seen.entry(&p.subject).or_default().insert(p.session.parse()?);
    }
    Ok(seen.into_iter().filter(|(_, s)| s.len() < Session::ALL.len()).map(|(k, _)| k.to_string()).collect())
}

/// Per-group screen errors. Subjects in `exclude` count towards Overall only.
pub fn group_report(pairs: &[GazePointPair], exclude: &BTreeSet<String>) -> Result<GroupReport> {
    let tagged: Vec<(Session, &GazePointPair)> =
        pairs.iter().map(|p| Ok((p.session.parse::<Session>()?, p))).collect::<Result<_>>()?;
    let mut report = GroupReport { excluded_subjects: exclude.iter().cloned().collect(), ..GroupReport::default() };
    for g in Group::ALL {
        let members: Vec<GazePointPair> = tagged
            .iter()
            .filter(|(s, p)| g.contains(*s) && (g == Group::Overall || !exclude.contains(&p.subject)))
            .map(|(_, p)| (*p).clone())
            .collect();
        match screen_errors(&members) {
            Some(error) => report.rows.push(GroupRow { group: g, count: members.len(), error }),
            None => report.omitted.push(g),
        }
    }
    Ok(report)
}

impl GroupReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("group,count,d_x_mm,d_y_mm,d_mm\n");
        for r in &self.rows {
            let _ =
                writeln!(s, "{},{},{:.4},{:.4},{:.4}", r.group, r.count, r.error.d_x, r.error.d_y, r.error.euclidean);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<10} {:>7} {:>10} {:>10} {:>10}\n", "group", "count", "d_X", "d_Y", "|d|");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<10} {:>7} {:>10.2} {:>10.2} {:>10.2}",
                r.group.label(),
                r.count,
                r.error.d_x,
                r.error.d_y,
                r.error.euclidean
            );
        }
        for g in &self.omitted {
            let _ = writeln!(s, "{:<10} (no records)", g.label());
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AngularError {
    pub count: usize,
    /// Mean angular error, degrees.
    pub d: f64,
    pub d_pitch: f64,
    pub d_yaw: f64,
}

/// Mean angular and per-axis absolute errors. Predictions are clamped to
/// `interval` first when one is given.
pub fn angular_errors(pairs: &[(GazeAngles, GazeAngles)], interval: Option<&GazeInterval>) -> AngularError {
    let n = pairs.len();
    if n == 0 {
        return AngularError::default();
    }
    let mut e = AngularError { count: n, ..AngularError::default() };
    for &(pred, gt) in pairs {
        let pred = interval.map_or(pred, |i| clamp_to_interval(pred, i));
        e.d += angular_error_angles(pred, gt);
        e.d_pitch += (pred.pitch - gt.pitch).abs();
        e.d_yaw += (pred.yaw - gt.yaw).abs();
    }
    let n = n as f64;
    AngularError { d: e.d / n, d_pitch: e.d_pitch / n, d_yaw: e.d_yaw / n, ..e }
}

pub fn angular_pairs(rows: &[PredictionRow]) -> Result<Vec<(GazeAngles, GazeAngles)>> {
    rows.iter()
        .map(|r| match (r.pred_angles(), r.gt_angles()) {
            (Some(p), Some(g)) => Ok((p, g)),
            _ => Err(Error::Schema(format!("row {}: angular columns missing", r.sample_id))),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroView {
    Clean,
    Glasses,
    Mask,
}

impl FromStr for ZeroView {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clean" => Ok(ZeroView::Clean),
            "glasses" => Ok(ZeroView::Glasses),
            "mask" => Ok(ZeroView::Mask),
            _ => Err(Error::Schema(format!("unknown view tag {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroGazeRecord {
    pub sample_id: String,
    pub triplet: String,
    pub view: ZeroView,
    pub pred: GazeAngles,
    /// `(pitch, yaw, roll)` in degrees.
    pub head_pose: Option<[f64; 3]>,
}

impl ZeroGazeRecord {
    pub fn from_row(row: &PredictionRow) -> Result<Self> {
        let schema = |what: &str| Error::Schema(format!("row {}: {what} missing", row.sample_id));
        Ok(Self {
            sample_id: row.sample_id.clone(),
            triplet: row.triplet.clone().ok_or_else(|| schema("triplet"))?,
            view: row.view.as_deref().ok_or_else(|| schema("view"))?.parse()?,
            pred: row.pred_angles().ok_or_else(|| schema("pred_pitch/pred_yaw"))?,
            head_pose: row.head_pose(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViewStats {
    pub count: usize,
    /// `[pitch, yaw]` mean prediction (the bias).
    pub mean: [f64; 2],
    /// Sample standard deviation per axis.
    pub std: [f64; 2],
    /// 95th percentile (nearest rank) of `sqrt(pitch² + yaw²)`.
    pub p95_radius: f64,
}

pub fn zerogaze_stats(records: &[ZeroGazeRecord]) -> BTreeMap<ZeroView, ViewStats> {
    let mut by_view: BTreeMap<ZeroView, Vec<GazeAngles>> = BTreeMap::new();
    for r in records {
        by_view.entry(r.view).or_default().push(r.pred);
    }
    by_view
        .into_iter()
        .map(|(view, preds)| {
            let n = preds.len() as f64;
            let mean = [preds.iter().map(|p| p.pitch).sum::<f64>() / n, preds.iter().map(|p| p.yaw).sum::<f64>() / n];
            let denom = (n - 1.0).max(1.0);
            let std = [
                (preds.iter().map(|p| (p.pitch - mean[0]).powi(2)).sum::<f64>() / denom).sqrt(),
                (preds.iter().map(|p| (p.yaw - mean[1]).powi(2)).sum::<f64>() / denom).sqrt(),
            ];
            let mut radii: Vec<f64> = preds.iter().map(|p| p.pitch.hypot(p.yaw)).collect();
            radii.sort_by(f64::total_cmp);
            let rank = ((0.95 * n).ceil() as usize).clamp(1, radii.len());
            (view, ViewStats { count: preds.len(), mean, std, p95_radius: radii[rank - 1] })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PoseFilterResult {
    pub retained: Vec<ZeroGazeRecord>,
    pub kept_triplets: usize,
    /// Triplets with a head pose outside the tolerances or unannotated.
    pub dropped_pose: usize,
    /// Triplets without exactly one record per view.
    pub dropped_incomplete: usize,
}

/// Keeps triplets whose three images all have `|pitch| < pitch_tol` and
/// `|yaw|, |roll| < other_tol`.
pub fn pose_filter(records: &[ZeroGazeRecord], pitch_tol: f64, other_tol: f64) -> PoseFilterResult {
    let mut triplets: BTreeMap<&str, Vec<&ZeroGazeRecord>> = BTreeMap::new();
    for r in records {
        triplets.entry(&r.triplet).or_default().push(r);
    }
    let mut out = PoseFilterResult::default();
    for (_, mut members) in triplets {
        members.sort_by_key(|r| r.view);
        let views: Vec<ZeroView> = members.iter().map(|r| r.view).collect();
        if views != [ZeroView::Clean, ZeroView::Glasses, ZeroView::Mask] {
            out.dropped_incomplete += 1;
            continue;
        }
        let ok = members.iter().all(|r| match r.head_pose {
            Some([p, y, roll]) => p.abs() < pitch_tol && y.abs() < other_tol && roll.abs() < other_tol,
            None => false,
        });
        if ok {
            out.kept_triplets += 1;
            out.retained.extend(members.into_iter().cloned());
        } else {
            out.dropped_pose += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn sp(pred: [f64; 2], gt: [f64; 2], subject: &str, session: &str) -> GazePointPair {
        GazePointPair { sample_id: String::new(), pred, gt, subject: subject.into(), session: session.into() }
    }

    #[test]
    fn screen_examples() {
        let zero = screen_errors(&[sp([1.0, 2.0], [1.0, 2.0], "p", "a")]).unwrap();
        assert_eq!((zero.d_x, zero.d_y, zero.euclidean), (0.0, 0.0, 0.0));
        let e = screen_errors(&[sp([3.0, 4.0], [0.0, 0.0], "p", "a")]).unwrap();
        assert_eq!((e.d_x, e.d_y, e.euclidean), (3.0, 4.0, 5.0));
        let two = screen_errors(&[sp([3.0, 4.0], [0.0, 0.0], "p", "a"), sp([0.0, 0.0], [0.0, 0.0], "p", "a")]).unwrap();
        assert_eq!(two.euclidean, 2.5);
        assert!(screen_errors(&[]).is_none());
    }

    #[test]
    fn group_membership() {
        let members = |g: Group| -> Vec<Session> { Session::ALL.into_iter().filter(|&s| g.contains(s)).collect() };
        use Session::*;
        assert_eq!(members(Group::Overall), Session::ALL.to_vec());
        assert_eq!(members(Group::Ideal), vec![A, B]);
        assert_eq!(members(Group::SideLit), vec![C, D]);
        assert_eq!(members(Group::Glasses), vec![E, F]);
        assert_eq!(members(Group::Masks), vec![G, H]);
    }

    #[test]
    fn report_groups() {
        let pairs = vec![sp([1.0, 0.0], [0.0, 0.0], "p", "e"), sp([0.0, 2.0], [0.0, 0.0], "p", "f")];
        let r = group_report(&pairs, &BTreeSet::new()).unwrap();
        let groups: Vec<Group> = r.rows.iter().map(|x| x.group).collect();
        assert_eq!(groups, vec![Group::Overall, Group::Glasses]);
        let only_i = group_report(&[sp([0.0; 2], [0.0; 2], "p", "i")], &BTreeSet::new()).unwrap();
        assert_eq!(only_i.rows.len(), 1);
        assert!(group_report(&[sp([0.0; 2], [0.0; 2], "p", "z")], &BTreeSet::new()).is_err());
        let empty = group_report(&[], &BTreeSet::new()).unwrap();
        assert!(empty.rows.is_empty() && empty.omitted.len() == 5);
        let excl: BTreeSet<String> = ["p".to_string()].into_iter().collect();
        let ex = group_report(&pairs, &excl).unwrap();
        assert_eq!(ex.rows.len(), 1);
        assert_eq!(ex.rows[0].count, 2);
    }

    #[test]
    fn overall_count_is_session_sum() {
        let pairs: Vec<_> = (0..45)
            .map(|i| sp([i as f64, 0.0], [0.0, 0.0], "p", ["a", "b", "c", "d", "e", "f", "g", "h", "i"][i % 9]))
            .collect();
        let r = group_report(&pairs, &BTreeSet::new()).unwrap();
        assert_eq!(r.rows[0].count, 45);
        let named: usize = r.rows[1..].iter().map(|x| x.count).sum();
        assert_eq!(named, 40);
        assert_eq!(r.to_csv(), group_report(&pairs, &BTreeSet::new()).unwrap().to_csv());
        assert!(reduced_session_subjects(&pairs).unwrap().is_empty());
        assert_eq!(reduced_session_subjects(&pairs[..8]).unwrap().len(), 1);
    }

    #[test]
    fn angular_examples() {
        let g = GazeAngles::new(3.0, -7.0);
        assert_eq!(angular_errors(&[(g, g)], None).d, 0.0);
        let e = angular_errors(&[(GazeAngles::new(0.0, 0.0), GazeAngles::new(4.0, 0.0))], None);
        assert!((e.d - 4.0).abs() < 1e-9);
        assert_eq!((e.d_pitch, e.d_yaw), (4.0, 0.0));
    }

    proptest! {
        #[test]
        fn angular_bounded_by_components(
            v in proptest::collection::vec((-30.0f64..14.0, -26.0f64..26.0, -30.0f64..14.0, -26.0f64..26.0), 1..20)
        ) {
            let pairs: Vec<_> = v.iter().map(|&(a, b, c, d)| (GazeAngles::new(a, b), GazeAngles::new(c, d))).collect();
            let e = angular_errors(&pairs, None);
            prop_assert!(e.d <= e.d_pitch + e.d_yaw + 0.1);
        }

        #[test]
        fn clamping_never_hurts(
            v in proptest::collection::vec((-60.0f64..60.0, -60.0f64..60.0, -30.0f64..14.0, -26.0f64..26.0), 1..20)
        ) {
            let pairs: Vec<_> = v.iter().map(|&(a, b, c, d)| (GazeAngles::new(a, b), GazeAngles::new(c, d))).collect();
            let raw = angular_errors(&pairs, None);
            let clamped = angular_errors(&pairs, Some(&GazeInterval::DEFAULT_GAZE));
            prop_assert!(clamped.d_pitch <= raw.d_pitch + 1e-12);
            prop_assert!(clamped.d_yaw <= raw.d_yaw + 1e-12);
        }

        #[test]
        fn euclidean_dominates_components(v in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..30)) {
            let pairs: Vec<_> = v.iter().map(|&(x, y)| sp([x, y], [0.0, 0.0], "p", "a")).collect();
            let e = screen_errors(&pairs).unwrap();
            prop_assert!(e.euclidean + 1e-12 >= e.d_x.max(e.d_y));
            prop_assert!(e.euclidean <= e.d_x + e.d_y + 1e-12);
        }
    }

    fn zr(triplet: &str, view: ZeroView, pred: [f64; 2], pose: [f64; 3]) -> ZeroGazeRecord {
        ZeroGazeRecord {
            sample_id: format!("{triplet}-{view:?}"),
            triplet: triplet.into(),
            view,
            pred: GazeAngles::new(pred[0], pred[1]),
            head_pose: Some(pose),
        }
    }

    #[test]
    fn zero_predictions_zero_bias() {
        let recs: Vec<_> = (0..10).map(|i| zr(&i.to_string(), ZeroView::Clean, [0.0, 0.0], [0.0; 3])).collect();
        let s = zerogaze_stats(&recs)[&ZeroView::Clean];
        assert_eq!((s.mean, s.std, s.p95_radius), ([0.0; 2], [0.0; 2], 0.0));
    }

    #[test]
    fn recovers_view_bias() {
        let mut rng = rng_from(4);
        let unit = Normal::new(0.0, 1.0).unwrap();
        let mut recs = Vec::new();
        for i in 0..10_000 {
            let t = i.to_string();
            recs.push(zr(&t, ZeroView::Clean, [unit.sample(&mut rng), unit.sample(&mut rng)], [0.0; 3]));
            recs.push(zr(&t, ZeroView::Glasses, [unit.sample(&mut rng) - 3.0, unit.sample(&mut rng)], [0.0; 3]));
        }
        let s = zerogaze_stats(&recs);
        assert!((s[&ZeroView::Glasses].mean[0] + 3.0).abs() < 0.1);
        assert!(s[&ZeroView::Clean].mean[0].abs() < 0.1);
        assert!((s[&ZeroView::Clean].std[0] - 1.0).abs() < 0.05);
    }

    #[test]
    fn pose_tolerances() {
        let ok = [0.0, 0.0, 0.0];
        let mut recs = Vec::new();
        for v in [ZeroView::Clean, ZeroView::Glasses, ZeroView::Mask] {
            recs.push(zr("t1", v, [0.0; 2], ok));
            recs.push(zr("t2", v, [0.0; 2], if v == ZeroView::Mask { [11.0, 0.0, 0.0] } else { ok }));
            recs.push(zr("t3", v, [0.0; 2], if v == ZeroView::Clean { [9.9, 4.9, -4.9] } else { ok }));
            recs.push(zr("t4", v, [0.0; 2], if v == ZeroView::Glasses { [0.0, 0.0, 5.0] } else { ok }));
        }
        recs.push(zr("t5", ZeroView::Clean, [0.0; 2], ok));
        let r = pose_filter(&recs, 10.0, 5.0);
        assert_eq!(r.kept_triplets, 2);
        assert_eq!(r.dropped_pose, 2);
        assert_eq!(r.dropped_incomplete, 1);
        let kept: BTreeSet<&str> = r.retained.iter().map(|x| x.triplet.as_str()).collect();
        assert_eq!(kept, ["t1", "t3"].into_iter().collect());
    }
}
