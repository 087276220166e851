//! `offshore`: every pipeline stage as a subcommand, plus an end-to-end run.
//!
//! Exit codes: 0 success, 1 pipeline or data error, 2 usage or config error.

mod commands;
mod failure;
mod pipeline;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use offshore_core::PipelineConfig;

use failure::{require_file, CliResult, Classify, Failure};

#[derive(Parser, Debug)]
#[command(name = "offshore", version, about = "Offshore-platform detection pipeline on SAR backscatter")]
struct Cli {
    /// Pipeline config JSON; missing fields take their defaults.
    #[arg(long, global = true, env = "OFFSHORE_CONFIG")]
    config: Option<PathBuf>,

    /// Worker threads for chip- and scene-parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags that override single config fields.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// dB mapped to 0 by quantization.
    #[arg(long, global = true)]
    db_lo: Option<f64>,
    /// dB mapped to 255 by quantization.
    #[arg(long, global = true)]
    db_hi: Option<f64>,
    /// Chip side in pixels.
    #[arg(long, global = true)]
    chip_size: Option<usize>,
    /// Fractional overlap between neighbouring chips.
    #[arg(long, global = true)]
    chip_overlap: Option<f64>,
    /// Minimum detection confidence kept.
    #[arg(long, global = true)]
    conf_threshold: Option<f64>,
    /// Pixel value a box needs somewhere inside to count as bright.
    #[arg(long, global = true)]
    dark_threshold: Option<u8>,
    /// Geographic IoU that joins detections into one object.
    #[arg(long, global = true)]
    dedup_iou: Option<f64>,
    /// IoU needed for a prediction to match ground truth.
    #[arg(long, global = true)]
    eval_iou: Option<f64>,
    /// Grid step in metres.
    #[arg(long, global = true)]
    grid_step_m: Option<f64>,
    /// Grid tile side in metres.
    #[arg(long, global = true)]
    grid_tile_m: Option<f64>,
    /// Pixel size in metres.
    #[arg(long, global = true)]
    pixel_size_m: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { cfg.$field = v; })*
            };
        }
        set!(
            db_lo => db_lo,
            db_hi => db_hi,
            chip_size => chip_size,
            chip_overlap => chip_overlap,
            conf_threshold => conf_threshold,
            dark_threshold => dark_pixel_threshold,
            dedup_iou => dedup_iou,
            eval_iou => eval_iou,
            grid_step_m => grid_step_m,
            grid_tile_m => grid_tile_m,
            pixel_size_m => pixel_size_m
        );
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-pixel temporal median of dB rasters (PFM).
    Composite(commands::CompositeArgs),
    /// Map a dB raster (PFM) to 8 bits (PGM).
    Quantize(commands::QuantizeArgs),
    /// Lay the processing grid over a planar region of interest.
    Grid(commands::GridArgs),
    /// Cut a tile into overlapping chips with geotransform sidecars.
    Chip(commands::ChipArgs),
    /// Generate synthetic scenes and labels from a manifest.
    Synth(commands::SynthArgs),
    /// Compute how many synthetic objects each class needs.
    Balance(commands::BalanceArgs),
    /// Noisy detections derived from labels, standing in for a trained model.
    OracleDetect(commands::OracleArgs),
    /// Filter, geolocate and deduplicate detections; write GeoJSON.
    Postprocess(commands::PostprocessArgs),
    /// Score detections against ground truth.
    Evaluate(commands::EvaluateArgs),
    /// Render an evaluation report as a table.
    Report(commands::ReportArgs),
    /// Run every stage from a run config.
    Pipeline(pipeline::PipelineArgs),
}

/// Config file (flag or environment), then flag overrides, then validation.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> CliResult<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => {
            require_file(p)?;
            offshore_core::io::read_json(p).usage(format!("invalid config {}", p.display()))?
        }
        None => PipelineConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate().usage("invalid configuration")?;
    Ok(cfg)
}

/// Log level chosen by `-v` flags; `None` when none were given.
pub fn verbosity_level(verbose: u8) -> Option<&'static str> {
    match verbose {
        0 => None,
        1 => Some("info"),
        _ => Some("debug"),
    }
}

pub fn init_logging(level: &str) {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

pub fn init_threads(threads: Option<usize>) -> CliResult {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        // a second call (already initialised) is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    init_threads(cli.threads)?;
    if let Command::Pipeline(args) = &cli.command {
        return pipeline::run(args, cli.config.as_deref(), &cli.overrides, cli.threads, cli.verbose);
    }
    init_logging(verbosity_level(cli.verbose).unwrap_or("warn"));
    let cfg = load_config(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Composite(a) => commands::composite(&a),
        Command::Quantize(a) => commands::quantize(&a, &cfg),
        Command::Grid(a) => commands::grid(&a, &cfg),
        Command::Chip(a) => commands::chip(&a, &cfg),
        Command::Synth(a) => commands::synth(&a, &cfg),
        Command::Balance(a) => commands::balance(&a),
        Command::OracleDetect(a) => commands::oracle_detect(&a, &cfg),
        Command::Postprocess(a) => commands::postprocess(&a, &cfg),
        Command::Evaluate(a) => commands::evaluate(&a, &cfg),
        Command::Report(a) => commands::report(&a),
        Command::Pipeline(_) => unreachable!("handled above"),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
