use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use gazeforge_core::calibrate::{
    calibration_anchors, evaluate_model, fit_npoint, fit_one_point, group_pairs, mpii_protocol, select_anchor_points,
    GazePointPair, ScreenError,
};
use gazeforge_core::predictions::load_predictions;
use gazeforge_core::Error;
use serde_json::{json, Map, Value};

use super::{write_file, Context, Report, SUMMARY_VERSION};
use crate::exit::EmptyInput;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    /// Average the nearest pairs around the screen center (1 point) or the
    /// center and corners (5 points).
    Anchors,
    /// Draw N random pairs per repetition; report medians.
    Random,
}

#[derive(Args)]
pub struct CalibrateArgs {
    /// Prediction CSV with pred/gt screen columns, subject and session.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "anchors")]
    pub protocol: Protocol,
    /// Calibrate each (subject, session) separately.
    #[arg(long)]
    pub per_session: bool,
    /// Where to write the fitted models (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn error_json(e: &ScreenError) -> Value {
    json!({ "d_x": e.d_x, "d_y": e.d_y, "d": e.euclidean })
}

fn mean(errors: &[ScreenError]) -> Option<ScreenError> {
    if errors.is_empty() {
        return None;
    }
    let n = errors.len() as f64;
    Some(errors.iter().fold(ScreenError::default(), |a, e| ScreenError {
        d_x: a.d_x + e.d_x / n,
        d_y: a.d_y + e.d_y / n,
        euclidean: a.euclidean + e.euclidean / n,
    }))
}

fn anchors(
    ctx: &Context,
    args: &CalibrateArgs,
    groups: &BTreeMap<String, Vec<GazePointPair>>,
) -> anyhow::Result<Report> {
    let all = calibration_anchors(&ctx.config.screen);
    let anchors: &[[f64; 2]] = match args.points {
        1 => &all[..1],
        5 => &all[..],
        n => return Err(Error::InvalidInput(format!("anchor calibration supports 1 or 5 points, not {n}")).into()),
    };
    let k = ctx.config.calibration.center_k;
    let mut models = Map::new();
    let (mut before, mut after) = (Vec::new(), Vec::new());
    for (key, pairs) in groups {
        let selected = select_anchor_points(pairs, anchors, k)?;
        let (model, fallback) = match selected.as_slice() {
            [one] => (fit_one_point(one), Vec::new()),
            many => {
                let fit = fit_npoint(many)?;
                (fit.model, fit.fallback_axes)
            }
        };
        let used: BTreeSet<&str> = selected.iter().flat_map(|p| p.sample_id.split('+')).collect();
        let held_out: Vec<GazePointPair> =
            pairs.iter().filter(|p| !used.contains(p.sample_id.as_str())).cloned().collect();
        let mut entry = json!({
            "model": model,
            "fallback_axes": fallback,
            "calibration_samples": used,
            "held_out": held_out.len(),
        });
        if !held_out.is_empty() {
            let (b, a) = (
                evaluate_model(&gazeforge_core::calibrate::CalibrationModel::IDENTITY, &held_out),
                evaluate_model(&model, &held_out),
            );
            entry["before"] = error_json(&b);
            entry["after"] = error_json(&a);
            before.push(b);
            after.push(a);
        }
        models.insert(key.clone(), entry);
    }
    let mean_before = mean(&before);
    let mean_after = mean(&after);
    let doc = json!({
        "schema_version": SUMMARY_VERSION,
        "protocol": "anchors",
        "points": args.points,
        "center_k": k,
        "per_session": args.per_session,
        "groups": Value::Object(models),
        "mean_before": mean_before.as_ref().map(error_json),
        "mean_after": mean_after.as_ref().map(error_json),
    });
    let mut text = format!("{}-point calibration over {} groups\n", args.points, groups.len());
    if let (Some(b), Some(a)) = (mean_before, mean_after) {
        text.push_str(&format!(
            "  held-out error before {:.3} mm, after {:.3} mm (d_x {:.3}, d_y {:.3})\n",
            b.euclidean, a.euclidean, a.d_x, a.d_y
        ));
    }
    finish(args, doc, text)
}

fn random(
    ctx: &Context,
    args: &CalibrateArgs,
    groups: &BTreeMap<String, Vec<GazePointPair>>,
) -> anyhow::Result<Report> {
    let reps = ctx.config.calibration.repetitions;
    let report = mpii_protocol(groups, args.points, reps, ctx.seed)?;
    let doc = json!({
        "schema_version": SUMMARY_VERSION,
        "protocol": "random",
        "points": args.points,
        "repetitions": reps,
        "seed": ctx.seed,
        "per_session": args.per_session,
        "per_group": report.per_subject.iter().map(|(k, e)| (k.clone(), error_json(e))).collect::<Map<_, _>>(),
        "mean": error_json(&report.mean),
    });
    let text = format!(
        "{} random points, median of {} repetitions over {} groups\n  mean error {:.3} mm (d_x {:.3}, d_y {:.3})\n",
        args.points,
        reps,
        groups.len(),
        report.mean.euclidean,
        report.mean.d_x,
        report.mean.d_y
    );
    finish(args, doc, text)
}

fn finish(args: &CalibrateArgs, doc: Value, text: String) -> anyhow::Result<Report> {
    if let Some(out) = &args.out {
        write_file(out, serde_json::to_string_pretty(&doc)?.as_bytes())?;
    }
    Ok(Report::new(doc, text))
}

pub fn run(ctx: &Context, args: &CalibrateArgs) -> anyhow::Result<Report> {
    let rows = load_predictions(&args.pairs)?;
    if rows.is_empty() {
        return Err(EmptyInput(format!("{} has no rows", args.pairs.display())).into());
    }
    let pairs: Vec<GazePointPair> = rows.iter().map(GazePointPair::from_row).collect::<gazeforge_core::Result<_>>()?;
    let groups = group_pairs(&pairs, args.per_session);
    if args.points == 0 {
        return Err(Error::InvalidInput("--points must be positive".into()).into());
    }
    match args.protocol {
        Protocol::Anchors => anchors(ctx, args, &groups),
        Protocol::Random => random(ctx, args, &groups),
    }
}
