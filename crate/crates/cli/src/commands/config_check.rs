use clap::Args;
use gazeforge_core::gridcodec::Axis;
use serde_json::json;

use super::{Context, Report};

#[derive(Args)]
pub struct ConfigCheckArgs {
    /// Also print the resolved configuration.
    #[arg(long)]
    pub print: bool,
}

pub fn run(ctx: &Context, args: &ConfigCheckArgs) -> anyhow::Result<Report> {
    let cfg = &ctx.config;
    let grid = cfg.grid()?;
    let (n_pitch, n_yaw) = (grid.bins(Axis::Pitch), grid.bins(Axis::Yaw));
    let draws = cfg.sampler.quota * grid.total_bins();
    let source = match &ctx.config_path {
        Some(p) => p.display().to_string(),
        None => "shipped defaults".to_string(),
    };
    let mut text = format!(
        "config ok: {source} (schema {})\ngrid: {n_pitch} pitch x {n_yaw} yaw = {} bins of {} deg\nsampler: quota {} per bin, {draws} draws per dataset\n",
        cfg.schema_version,
        grid.total_bins(),
        cfg.bin_size_deg,
        cfg.sampler.quota
    );
    if args.print {
        text.push_str(&serde_json::to_string_pretty(cfg)?);
        text.push('\n');
    }
    let mut summary = json!({
        "source": source,
        "config_schema_version": cfg.schema_version,
        "bins": grid.total_bins(),
        "pitch_bins": n_pitch,
        "yaw_bins": n_yaw,
        "bin_size_deg": cfg.bin_size_deg,
        "quota": cfg.sampler.quota,
        "draws_per_dataset": draws,
        "seed": ctx.seed,
    });
    if args.print {
        summary["config"] = serde_json::to_value(cfg)?;
    }
    Ok(Report::new(summary, text))
}
