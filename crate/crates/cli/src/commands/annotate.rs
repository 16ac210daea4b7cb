use std::path::PathBuf;

use anyhow::Context as _;
use clap::Args;
use gazeforge_core::annotate::{annotate_face, filter_labels, SegLabel};
use gazeforge_core::imgcore::{load_landmarks, load_png, save_mask_png};
use gazeforge_core::landmarks::Side;
use gazeforge_core::manifest::{Manifest, SampleRecord};
use gazeforge_core::Error;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{create_dir, load_manifest_strict, unique_stems, write_file, Context, Report};

#[derive(Args)]
pub struct AnnotateArgs {
    /// Sample manifest (JSONL); every record needs `image` and `landmarks`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory, one subdirectory per sample.
    #[arg(long)]
    pub out: PathBuf,
}

fn label_for(ctx: &Context, manifest: &Manifest, r: &SampleRecord) -> anyhow::Result<SegLabel> {
    let missing = |what: &str| Error::InvalidInput(format!("sample {} has no {what}", r.sample_id));
    let face = load_png(&manifest.resolve(r.image.as_deref().ok_or_else(|| missing("image"))?))?;
    let lm = load_landmarks(&manifest.resolve(r.landmarks.as_deref().ok_or_else(|| missing("landmarks"))?))?;
    let cfg = &ctx.config;
    let raw = annotate_face(&face, &lm, &cfg.landmarks, &cfg.annotate);
    Ok(filter_labels(raw, cfg.annotate.iou_threshold))
}

fn process(ctx: &Context, manifest: &Manifest, r: &SampleRecord, dir: PathBuf) -> anyhow::Result<Value> {
    let label = label_for(ctx, manifest, r).with_context(|| format!("annotating {}", r.sample_id))?;
    create_dir(&dir)?;
    let mut validity = serde_json::Map::new();
    validity.insert("sample_id".into(), r.sample_id.clone().into());
    for side in Side::BOTH {
        let s = label.side(side);
        save_mask_png(&s.eye, &dir.join(format!("{}_eye.png", side.name())))?;
        save_mask_png(&s.iris, &dir.join(format!("{}_iris.png", side.name())))?;
        validity.insert(
            side.name().into(),
            json!({
                "eye_valid": s.eye_valid,
                "iris_valid": s.iris_valid,
                "iou": s.iou(),
            }),
        );
    }
    let validity = Value::Object(validity);
    write_file(&dir.join("validity.json"), serde_json::to_string_pretty(&validity)?.as_bytes())?;
    Ok(validity)
}

pub fn run(ctx: &Context, args: &AnnotateArgs) -> anyhow::Result<Report> {
    let manifest = load_manifest_strict(&args.manifest)?;
    let stems = unique_stems(manifest.records.iter().map(|r| r.sample_id.as_str()))?;
    create_dir(&args.out)?;
    let pool = ctx.pool()?;
    let results: Vec<Value> = pool.install(|| {
        manifest
            .records
            .par_iter()
            .zip(stems.par_iter())
            .map(|(r, stem)| process(ctx, &manifest, r, args.out.join(stem)))
            .collect::<anyhow::Result<_>>()
    })?;

    let valid = |side: &str| results.iter().filter(|v| v[side]["iris_valid"] == true).count();
    let (left, right) = (valid(Side::Left.name()), valid(Side::Right.name()));
    let text = format!(
        "annotated {} samples under {}\n  valid left eyes  {left}\n  valid right eyes {right}\n",
        results.len(),
        args.out.display()
    );
    let summary = json!({
        "samples": results.len(),
        "valid": { "left": left, "right": right },
        "out": args.out,
    });
    Ok(Report::new(summary, text))
}
