use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use gazeforge_core::calibrate::GazePointPair;
use gazeforge_core::evalbench::{
    angular_errors, angular_pairs, group_report, pose_filter, reduced_session_subjects, zerogaze_stats, ZeroGazeRecord,
};
use gazeforge_core::predictions::load_predictions;
use serde_json::json;

use super::{write_file, Context, Report};
use crate::exit::EmptyInput;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Screen-space errors (mm) grouped by capture session.
    Screen,
    /// Angular errors (degrees).
    Angular,
    /// Prediction bias on zero-gaze triplets.
    Zerogaze,
}

#[derive(Args)]
pub struct EvaluateArgs {
    /// Prediction CSV.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Screen mode: keep subjects without the full session set out of the named groups.
    #[arg(long)]
    pub exclude_reduced: bool,
    /// Zero-gaze mode: keep triplets regardless of head pose.
    #[arg(long)]
    pub no_pose_filter: bool,
    /// Report file (CSV for screen mode, JSON otherwise).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(ctx: &Context, args: &EvaluateArgs) -> anyhow::Result<Report> {
    let rows = load_predictions(&args.pred)?;
    if rows.is_empty() {
        return Err(EmptyInput(format!("{} has no rows", args.pred.display())).into());
    }
    match args.mode {
        Mode::Screen => {
            let pairs: Vec<GazePointPair> =
                rows.iter().map(GazePointPair::from_row).collect::<gazeforge_core::Result<_>>()?;
            let exclude = if args.exclude_reduced { reduced_session_subjects(&pairs)? } else { BTreeSet::new() };
            let report = group_report(&pairs, &exclude)?;
            if let Some(out) = &args.out {
                write_file(out, report.to_csv().as_bytes())?;
            }
            Ok(Report::new(serde_json::to_value(&report)?, report.to_text()))
        }
        Mode::Angular => {
            let pairs = angular_pairs(&rows)?;
            let eval = &ctx.config.evaluation;
            let interval = eval.clamp_predictions.then_some(&ctx.config.gaze_interval);
            let e = angular_errors(&pairs, interval);
            let summary = json!({ "count": e.count, "d": e.d, "d_pitch": e.d_pitch, "d_yaw": e.d_yaw, "clamped": eval.clamp_predictions });
            if let Some(out) = &args.out {
                write_file(out, serde_json::to_string_pretty(&summary)?.as_bytes())?;
            }
            let text = format!(
                "{} predictions: d {:.4} deg, d_pitch {:.4} deg, d_yaw {:.4} deg\n",
                e.count, e.d, e.d_pitch, e.d_yaw
            );
            Ok(Report::new(summary, text))
        }
        Mode::Zerogaze => {
            let records: Vec<ZeroGazeRecord> =
                rows.iter().map(ZeroGazeRecord::from_row).collect::<gazeforge_core::Result<_>>()?;
            let eval = &ctx.config.evaluation;
            let (kept, filter) = if args.no_pose_filter {
                (records, None)
            } else {
                let f = pose_filter(&records, eval.pitch_tolerance_deg, eval.other_tolerance_deg);
                (f.retained.clone(), Some(f))
            };
            let stats = zerogaze_stats(&kept);
            let mut text = String::new();
            if let Some(f) = &filter {
                text.push_str(&format!(
                    "kept {} triplets, dropped {} for head pose and {} incomplete\n",
                    f.kept_triplets, f.dropped_pose, f.dropped_incomplete
                ));
            }
            text.push_str(&format!(
                "{:<8} {:>6} {:>10} {:>10} {:>9} {:>9} {:>9}\n",
                "view", "n", "pitch", "yaw", "sd_pitch", "sd_yaw", "p95_r"
            ));
            for (view, s) in &stats {
                let name = serde_json::to_value(view)?.as_str().unwrap_or_default().to_string();
                text.push_str(&format!(
                    "{name:<8} {:>6} {:>10.4} {:>10.4} {:>9.4} {:>9.4} {:>9.4}\n",
                    s.count, s.mean[0], s.mean[1], s.std[0], s.std[1], s.p95_radius
                ));
            }
            let summary = json!({
                "views": stats,
                "filter": filter.map(|f| json!({
                    "kept_triplets": f.kept_triplets,
                    "dropped_pose": f.dropped_pose,
                    "dropped_incomplete": f.dropped_incomplete,
                })),
            });
            if let Some(out) = &args.out {
                write_file(out, serde_json::to_string_pretty(&summary)?.as_bytes())?;
            }
            Ok(Report::new(summary, text))
        }
    }
}
