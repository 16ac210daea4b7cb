use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use clap::Args;
use gazeforge_core::augment::{build_views, load_library, AugmentAssets, AugmentProtocol, AugmentSource, Method};
use gazeforge_core::imgcore::{load_landmarks, load_png, save_png, ImageBuffer};
use gazeforge_core::manifest::{write_jsonl, DatasetId, Manifest, SampleRecord};
use gazeforge_core::Error;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{create_dir, load_manifest_strict, load_png_dir, unique_stems, write_file, Context, Report};

#[derive(Args)]
pub struct AugmentArgs {
    /// Sample manifest (JSONL).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Augmentation protocol JSON replacing the configured one.
    #[arg(long)]
    pub protocol: Option<PathBuf>,
    /// Output directory; views go to `views/`, metadata to `views.jsonl`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
    /// Background PNG directory (also the lens reflection pool).
    #[arg(long)]
    pub backgrounds: Option<PathBuf>,
    /// Glasses template library directory.
    #[arg(long)]
    pub glasses_library: Option<PathBuf>,
    /// Mask texture PNG directory.
    #[arg(long)]
    pub mask_textures: Option<PathBuf>,
}

#[derive(Serialize)]
struct ViewRow<'a> {
    sample_id: &'a str,
    view_index: usize,
    file: String,
    dataset_id: DatasetId,
    subject_id: &'a str,
    pitch: f64,
    yaw: f64,
    /// Source or synthesized glasses.
    glasses: bool,
    mask: bool,
    flip: bool,
    applied: Vec<Method>,
    seed: u64,
}

fn load_protocol(path: &Path) -> anyhow::Result<AugmentProtocol> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let p: AugmentProtocol =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    p.validate()?;
    Ok(p)
}

fn load_assets(ctx: &Context, args: &AugmentArgs) -> anyhow::Result<AugmentAssets> {
    let paths = &ctx.config.paths;
    let pick = |flag: &Option<PathBuf>, cfg: &Option<PathBuf>| -> Option<PathBuf> {
        flag.clone().or_else(|| cfg.as_ref().map(|p| ctx.config.resolve(p)))
    };
    let mut assets = AugmentAssets::default();
    if let Some(dir) = pick(&args.backgrounds, &paths.backgrounds) {
        assets.backgrounds = load_png_dir(&dir).with_context(|| format!("backgrounds in {}", dir.display()))?;
    }
    if let Some(dir) = pick(&args.glasses_library, &paths.glasses_library) {
        assets.glasses = load_library(&dir).with_context(|| format!("glasses library {}", dir.display()))?;
    }
    if let Some(dir) = pick(&args.mask_textures, &paths.mask_textures) {
        assets.mask_textures = load_png_dir(&dir).with_context(|| format!("mask textures in {}", dir.display()))?;
    }
    Ok(assets)
}

fn load_source(manifest: &Manifest, r: &SampleRecord) -> anyhow::Result<AugmentSource> {
    let image =
        r.image.as_deref().ok_or_else(|| Error::InvalidInput(format!("sample {} has no image", r.sample_id)))?;
    let image = load_png(&manifest.resolve(image))?;
    let matte = match r.matte.as_deref() {
        Some(m) => {
            let m = load_png(&manifest.resolve(m))?;
            Some(if m.channels() == 1 { m } else { m.channel(0) })
        }
        None => None,
    };
    let landmarks = r.landmarks.as_deref().map(|l| load_landmarks(&manifest.resolve(l))).transpose()?;
    Ok(AugmentSource {
        sample_id: r.sample_id.clone(),
        image,
        matte,
        landmarks,
        gaze: r.gaze(),
        head_pose: r.head_pose(),
    })
}

#[allow(clippy::too_many_arguments)]
fn process(
    ctx: &Context,
    manifest: &Manifest,
    protocol: &AugmentProtocol,
    assets: &AugmentAssets,
    record: &SampleRecord,
    stem: &str,
    views_dir: &Path,
    epoch: u64,
) -> anyhow::Result<Vec<serde_json::Value>> {
    let source = load_source(manifest, record).with_context(|| format!("sample {}", record.sample_id))?;
    let views = build_views(&source, protocol, assets, &ctx.config.landmarks, ctx.seed, epoch)
        .with_context(|| format!("augmenting {}", record.sample_id))?;
    let mut rows = Vec::with_capacity(views.len());
    for v in views {
        let file = format!("{stem}_v{}.png", v.view_index);
        save_image(&v.image, &views_dir.join(&file))?;
        let row = ViewRow {
            sample_id: &record.sample_id,
            view_index: v.view_index,
            file: format!("views/{file}"),
            dataset_id: record.dataset,
            subject_id: &record.subject,
            pitch: v.gaze.pitch,
            yaw: v.gaze.yaw,
            glasses: record.glasses || v.glasses_flag,
            mask: record.mask || v.mask_flag,
            flip: v.flip_applied,
            applied: v.applied,
            seed: v.seed,
        };
        rows.push(serde_json::to_value(&row)?);
    }
    Ok(rows)
}

fn save_image(img: &ImageBuffer, path: &Path) -> anyhow::Result<()> {
    save_png(img, path).with_context(|| format!("writing {}", path.display()))
}

pub fn run(ctx: &Context, args: &AugmentArgs) -> anyhow::Result<Report> {
    let manifest = load_manifest_strict(&args.manifest)?;
    let protocol = match &args.protocol {
        Some(p) => load_protocol(p)?,
        None => ctx.config.augment.clone(),
    };
    let assets = load_assets(ctx, args)?;
    let stems = unique_stems(manifest.records.iter().map(|r| r.sample_id.as_str()))?;
    let views_dir = args.out.join("views");
    create_dir(&views_dir)?;

    let pool = ctx.pool()?;
    let per_sample: Vec<Vec<serde_json::Value>> = pool.install(|| {
        manifest
            .records
            .par_iter()
            .zip(stems.par_iter())
            .map(|(r, stem)| process(ctx, &manifest, &protocol, &assets, r, stem, &views_dir, args.epoch))
            .collect::<anyhow::Result<_>>()
    })?;

    let rows: Vec<serde_json::Value> = per_sample.into_iter().flatten().collect();
    let mut meta = Vec::new();
    write_jsonl(&mut meta, &rows)?;
    write_file(&args.out.join("views.jsonl"), &meta)?;

    let mut method_counts: BTreeMap<String, usize> = Method::ORDER
        .iter()
        .map(|m| (serde_json::to_value(m).unwrap().as_str().unwrap_or_default().to_string(), 0))
        .collect();
    let mut flipped = 0;
    for row in &rows {
        if row["flip"].as_bool() == Some(true) {
            flipped += 1;
        }
        for m in row["applied"].as_array().into_iter().flatten() {
            *method_counts.entry(m.as_str().unwrap_or_default().to_string()).or_default() += 1;
        }
    }
    let mut text = format!(
        "augmented {} samples into {} views ({} flipped) under {}\n",
        manifest.records.len(),
        rows.len(),
        flipped,
        args.out.display()
    );
    for (m, n) in &method_counts {
        text.push_str(&format!("  {m:<13} {n}\n"));
    }
    let summary = json!({
        "samples": manifest.records.len(),
        "views": rows.len(),
        "flipped": flipped,
        "method_counts": method_counts,
        "epoch": args.epoch,
        "seed": ctx.seed,
        "out": args.out,
    });
    Ok(Report::new(summary, text))
}
