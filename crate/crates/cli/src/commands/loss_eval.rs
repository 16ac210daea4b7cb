use std::path::PathBuf;

use clap::Args;
use gazeforge_core::gridcodec::Axis;
use gazeforge_core::losses::{
    build_accessory_mask, build_dataset_mask, build_pitch_mask, read_feature_dump, supcon_loss, Accessory, PairMask,
};
use serde_json::{json, Map, Value};

use super::{Context, Report};
use crate::exit::EmptyInput;

#[derive(Args)]
pub struct LossEvalArgs {
    /// Feature dump (JSON header line followed by little-endian f32 rows).
    #[arg(long)]
    pub features: PathBuf,
    /// Row metadata sidecar (JSONL).
    #[arg(long)]
    pub meta: PathBuf,
}

pub fn run(ctx: &Context, args: &LossEvalArgs) -> anyhow::Result<Report> {
    let batch = read_feature_dump(&args.features, &args.meta)?;
    if batch.is_empty() {
        return Err(EmptyInput(format!("{} has no rows", args.features.display())).into());
    }
    let grid = ctx.config.grid()?;
    let w = ctx.config.losses.weights;
    let s_pitch = grid.bin_size(Axis::Pitch);
    let terms: [(&str, f64, PairMask); 4] = [
        ("dataset", w.lambda_dataset, build_dataset_mask(&batch, &grid)),
        ("pitch", w.lambda_pitch, build_pitch_mask(&batch, s_pitch)),
        ("glasses", w.lambda_glasses, build_accessory_mask(&batch, Accessory::Glasses)),
        ("mask", w.lambda_mask, build_accessory_mask(&batch, Accessory::Mask)),
    ];

    let mut out = Map::new();
    let mut total = 0.0;
    let mut text = format!("{} rows of dimension {}, tau {}\n", batch.len(), batch.features().cols(), w.tau_supcon);
    text.push_str(&format!("  {:<8} {:>12} {:>8} {:>12} {:>8}\n", "term", "loss", "weight", "weighted", "pairs"));
    for (name, weight, mask) in &terms {
        let loss = supcon_loss(batch.features(), mask, w.tau_supcon)?.loss;
        total += weight * loss;
        text.push_str(&format!(
            "  {name:<8} {loss:>12.6} {weight:>8} {:>12.6} {:>8}\n",
            weight * loss,
            mask.count_pairs()
        ));
        out.insert(
            (*name).into(),
            json!({ "loss": loss, "weight": weight, "weighted": weight * loss, "positive_pairs": mask.count_pairs() }),
        );
    }
    text.push_str(&format!("  weighted contrastive total {total:.6}\n"));
    let summary = json!({
        "rows": batch.len(),
        "dim": batch.features().cols(),
        "tau": w.tau_supcon,
        "pitch_threshold_deg": s_pitch,
        "terms": Value::Object(out),
        "weighted_total": total,
    });
    Ok(Report::new(summary, text))
}
