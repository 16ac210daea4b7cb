mod commands;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gazeforge_core::config::RunConfig;

use commands::{
    annotate::AnnotateArgs, augment::AugmentArgs, calibrate::CalibrateArgs, config_check::ConfigCheckArgs,
    evaluate::EvaluateArgs, loss_eval::LossEvalArgs, plan::PlanArgs, Context, Report,
};

/// Gaze dataset tooling: augmentation, labeling, epoch planning, loss
/// checks, calibration and evaluation.
#[derive(Parser)]
#[command(name = "gazeforge", version)]
struct Cli {
    /// Run configuration JSON; the shipped defaults apply when absent.
    #[arg(long, global = true, env = "GAZEFORGE_CONFIG")]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Print a JSON summary to stdout instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render augmented views for every sample of a manifest.
    Augment(AugmentArgs),
    /// Derive eye and iris masks from face images and landmarks.
    Annotate(AnnotateArgs),
    /// Build a stratified sampling plan for one epoch.
    PlanEpoch(PlanArgs),
    /// Evaluate contrastive loss terms on a feature dump.
    LossEval(LossEvalArgs),
    /// Fit per-subject screen-space calibration.
    Calibrate(CalibrateArgs),
    /// Score predictions.
    Evaluate(EvaluateArgs),
    /// Validate a configuration and print its derived constants.
    ConfigCheck(ConfigCheckArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Augment(_) => "augment",
            Command::Annotate(_) => "annotate",
            Command::PlanEpoch(_) => "plan-epoch",
            Command::LossEval(_) => "loss-eval",
            Command::Calibrate(_) => "calibrate",
            Command::Evaluate(_) => "evaluate",
            Command::ConfigCheck(_) => "config-check",
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Report> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::shipped(),
    };
    let ctx = Context {
        seed: cli.seed.unwrap_or(config.seed),
        config,
        config_path: cli.config.clone(),
        workers: cli.workers,
    };
    match &cli.command {
        Command::Augment(a) => commands::augment::run(&ctx, a),
        Command::Annotate(a) => commands::annotate::run(&ctx, a),
        Command::PlanEpoch(a) => commands::plan::run(&ctx, a),
        Command::LossEval(a) => commands::loss_eval::run(&ctx, a),
        Command::Calibrate(a) => commands::calibrate::run(&ctx, a),
        Command::Evaluate(a) => commands::evaluate::run(&ctx, a),
        Command::ConfigCheck(a) => commands::config_check::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let json = cli.json;
    let name = cli.command.name();
    match run(cli) {
        Ok(report) => {
            if json {
                println!("{}", report.to_json(name));
            } else {
                print!("{}", report.text);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            let code = exit::classify(&err);
            if json {
                println!("{}", exit::error_json(name, &err, code));
            }
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
