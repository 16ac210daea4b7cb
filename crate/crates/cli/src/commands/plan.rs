use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::Args;
use gazeforge_core::manifest::{write_jsonl, Manifest};
use gazeforge_core::sampler::{ingest, plan_epoch, subject_histogram, CellKey, EmptyCellPolicy};
use serde_json::json;

use super::{write_file, Context, Report};
use crate::exit::EmptyInput;

#[derive(Args)]
pub struct PlanArgs {
    /// Sample manifest (JSONL).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Plan output (JSONL, one draw per line).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
    /// Draws per (dataset, cell); defaults to the configured quota.
    #[arg(long)]
    pub quota: Option<usize>,
    /// Skip empty cells instead of failing.
    #[arg(long)]
    pub skip_empty_cells: bool,
}

pub fn run(ctx: &Context, args: &PlanArgs) -> anyhow::Result<Report> {
    let cfg = &ctx.config;
    let manifest = Manifest::load(&args.manifest)?;
    for bad in &manifest.malformed {
        log::warn!("{} line {}: {}", args.manifest.display(), bad.line, bad.message);
    }
    let (registry, report) = ingest(manifest.records, &cfg.gaze_interval, &cfg.head_pose_interval);
    for (id, reason) in &report.malformed {
        log::warn!("rejected {id}: {reason}");
    }
    if registry.is_empty() {
        return Err(EmptyInput(format!("no usable samples in {}", args.manifest.display())).into());
    }
    let grid = cfg.grid()?;
    let mut opts = cfg.sampler.clone();
    if let Some(q) = args.quota {
        opts.quota = q;
    }
    if args.skip_empty_cells {
        opts.empty_cell_policy = EmptyCellPolicy::Skip;
    }
    let plan = plan_epoch(&registry, &grid, &opts, ctx.seed, args.epoch)?;

    if let Some(out) = &args.out {
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &plan.entries)?;
        write_file(out, &buf)?;
    }

    // Largest max-min draw difference between subjects sharing a balanced cell.
    let hist = subject_histogram(&plan, &registry, &grid)?;
    let mut cell_subjects: BTreeMap<CellKey, BTreeSet<&str>> = BTreeMap::new();
    for r in registry.records() {
        if opts.subject_balanced.contains(&r.dataset) {
            let (cp, cy) = grid.discretize(r.gaze())?;
            let key = CellKey { dataset: r.dataset, cell: grid.cell_index(cp, cy) };
            cell_subjects.entry(key).or_default().insert(&r.subject);
        }
    }
    let spread = cell_subjects
        .iter()
        .filter_map(|(key, subjects)| {
            let counts = hist.get(key)?;
            let n: Vec<usize> = subjects.iter().map(|s| counts.get(*s).copied().unwrap_or(0)).collect();
            Some(n.iter().max()? - n.iter().min()?)
        })
        .max()
        .unwrap_or(0);

    let per_dataset = plan.per_dataset();
    let mut text = format!(
        "retained {} of {} records ({} outside gaze range, {} outside head-pose range, {} rejected)\n",
        report.retained,
        report.retained + report.dropped_gaze + report.dropped_head_pose + report.malformed.len(),
        report.dropped_gaze,
        report.dropped_head_pose,
        report.malformed.len()
    );
    text.push_str(&format!("grid {} bins, quota {} per bin, epoch {}\n", grid.total_bins(), opts.quota, args.epoch));
    for (ds, n) in &per_dataset {
        text.push_str(&format!("  dataset {ds}: {n} draws\n"));
    }
    if !plan.skipped_cells.is_empty() {
        text.push_str(&format!("  skipped {} empty cells\n", plan.skipped_cells.len()));
    }
    text.push_str(&format!("  subject spread per balanced cell: {spread}\n"));

    let summary = json!({
        "epoch": args.epoch,
        "seed": ctx.seed,
        "bins": grid.total_bins(),
        "quota": opts.quota,
        "retained": report.retained,
        "dropped_gaze": report.dropped_gaze,
        "dropped_head_pose": report.dropped_head_pose,
        "rejected": report.malformed.len(),
        "malformed_lines": manifest.malformed.len(),
        "draws": plan.entries.len(),
        "per_dataset": per_dataset.iter().map(|(k, v)| (k.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        "skipped_cells": plan.skipped_cells.iter().map(|k| format!("{}:{}", k.dataset, k.cell)).collect::<Vec<_>>(),
        "max_subject_spread": spread,
        "out": args.out,
    });
    Ok(Report::new(summary, text))
}
