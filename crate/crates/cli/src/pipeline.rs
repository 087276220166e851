//! End-to-end run driven by one JSON run config.
//!
//! Stage outputs land in the work directory:
//! `composite.pfm`, `quantized.pgm`, `chips/`, `detections.jsonl`,
//! `detections.geojson`, `report.json` and `report.txt`.

use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::Args;
use log::info;
use offshore_core::detection::to_jsonl;
use offshore_core::evaluate::{render_table, GroundTruthSet, OracleParams};
use offshore_core::preprocess::quantize_db;
use offshore_core::{io, PipelineConfig};
use serde::Deserialize;

use crate::commands;
use crate::failure::{require_dir, require_file, CliResult, Classify, Failure};
use crate::{init_logging, load_config, verbosity_level, Overrides};

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Run config JSON.
    pub run_config: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub pipeline: PipelineConfig,
    /// Directory of co-registered dB rasters (PFM) to composite.
    pub stack_dir: PathBuf,
    /// Pixel-to-map transform of the stack.
    pub geotransform: [f64; 6],
    #[serde(default = "default_tile_id")]
    pub tile_id: String,
    /// Ground truth JSON Lines; required by the oracle detector and by
    /// the evaluation stage.
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
    pub workdir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub parallelism: usize,
    #[serde(default = "default_log_level")]
    pub log_level: String,
    #[serde(default)]
    pub merge: bool,
    pub detector: DetectorSpec,
}

fn default_tile_id() -> String {
    "scene".into()
}

fn one() -> usize {
    1
}

fn default_log_level() -> String {
    "warn".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DetectorSpec {
    Oracle {
        #[serde(default = "default_jitter")]
        jitter: f64,
        #[serde(default = "default_rate")]
        dropout: f64,
        #[serde(default = "default_rate")]
        spurious: f64,
    },
    /// Shell command; `{chips_dir}` and `{out_jsonl}` are substituted.
    Command { template: String },
}

fn default_jitter() -> f64 {
    2.0
}

fn default_rate() -> f64 {
    0.05
}

impl RunConfig {
    fn load(path: &Path) -> CliResult<Self> {
        require_file(path)?;
        let mut rc: RunConfig =
            io::read_json(path).usage(format!("invalid run config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut rc.stack_dir);
        resolve(&mut rc.workdir);
        if let Some(gt) = rc.ground_truth.as_mut() {
            resolve(gt);
        }
        Ok(rc)
    }

    fn check(&self) -> CliResult {
        if self.parallelism == 0 {
            return Err(Failure::usage("parallelism must be at least 1"));
        }
        require_dir(&self.stack_dir)?;
        if let Some(gt) = &self.ground_truth {
            require_file(gt)?;
        }
        if matches!(self.detector, DetectorSpec::Oracle { .. }) && self.ground_truth.is_none() {
            return Err(Failure::usage("the oracle detector needs ground_truth"));
        }
        if let DetectorSpec::Command { template } = &self.detector {
            if !template.contains("{out_jsonl}") {
                return Err(Failure::usage("detector template lacks {out_jsonl}"));
            }
        }
        Ok(())
    }
}

/// Wrap a stage failure so the message leads with the stage name; the
/// exit class of the underlying error is kept.
fn stage<T>(name: &str, r: CliResult<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        Failure::Usage(e) => Failure::Usage(e.context(format!("stage {name} failed"))),
        Failure::Data(e) => Failure::Data(e.context(format!("stage {name} failed"))),
    })
}

pub fn run(
    args: &PipelineArgs,
    config: Option<&Path>,
    overrides: &Overrides,
    threads: Option<usize>,
    verbose: u8,
) -> CliResult {
    let rc = RunConfig::load(&args.run_config)?;
    init_logging(verbosity_level(verbose).unwrap_or(&rc.log_level));
    // an explicit --config replaces the run config's pipeline block
    let mut cfg = match config {
        Some(p) => load_config(Some(p), &Overrides::default())?,
        None => rc.pipeline.clone(),
    };
    overrides.apply(&mut cfg);
    cfg.validate().usage("invalid configuration")?;
    rc.check()?;

    if threads.is_some() {
        return stages(&rc, &cfg);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(rc.parallelism)
        .build()
        .data("building worker pool")?;
    pool.install(|| stages(&rc, &cfg))
}

fn stages(rc: &RunConfig, cfg: &PipelineConfig) -> CliResult {
    let wd = &rc.workdir;
    std::fs::create_dir_all(wd).data(format!("creating workdir {}", wd.display()))?;

    let composite_path = wd.join("composite.pfm");
    let composite = stage("composite", (|| {
        let files = commands::collect_stack(std::slice::from_ref(&rc.stack_dir))?;
        info!("compositing {} rasters", files.len());
        let out = commands::composite_files(&files)?;
        io::write_pfm(&composite_path, &out).data(composite_path.display())?;
        Ok(out)
    })())?;

    let quantized_path = wd.join("quantized.pgm");
    let quantized = stage("quantize", (|| {
        let q = quantize_db(&composite, cfg).data("quantization")?;
        io::write_pgm(&quantized_path, &q).data(quantized_path.display())?;
        Ok(q)
    })())?;

    let chips_dir = wd.join("chips");
    stage("chip", (|| {
        // stale chips from an earlier run with other settings would be
        // picked up by later stages
        if chips_dir.exists() {
            std::fs::remove_dir_all(&chips_dir).data(chips_dir.display())?;
        }
        std::fs::create_dir_all(&chips_dir).data(chips_dir.display())?;
        let gt = commands::parse_geotransform(&rc.geotransform)?;
        let n = commands::chip_raster(&quantized, &gt, &rc.tile_id, &chips_dir, cfg)?;
        info!("{n} chips");
        Ok(())
    })())?;

    let truth = match &rc.ground_truth {
        Some(p) => Some(stage("ground-truth", commands::read_truth(p))?),
        None => None,
    };

    let det_path = wd.join("detections.jsonl");
    stage("detect", detect(rc, cfg, &chips_dir, &det_path, truth.as_ref()))?;

    let geojson_path = wd.join("detections.geojson");
    let kept = stage(
        "postprocess",
        commands::postprocess_files(&det_path, &chips_dir, &geojson_path, cfg),
    )?;

    let Some(truth) = truth else {
        info!("no ground truth configured; evaluation skipped");
        return Ok(());
    };
    stage("evaluate", (|| {
        let report = commands::evaluate_files(&kept, &truth, cfg, rc.merge)?;
        io::write_json(&wd.join("report.json"), &report).data("writing report.json")?;
        let table = render_table(&report);
        io::write_bytes(&wd.join("report.txt"), table.as_bytes()).data("writing report.txt")?;
        print!("{table}");
        Ok(())
    })())
}

fn detect(
    rc: &RunConfig,
    cfg: &PipelineConfig,
    chips_dir: &Path,
    out: &Path,
    truth: Option<&GroundTruthSet>,
) -> CliResult {
    match &rc.detector {
        DetectorSpec::Oracle {
            jitter,
            dropout,
            spurious,
        } => {
            let truth = truth.ok_or_else(|| Failure::usage("the oracle detector needs ground_truth"))?;
            let chips = commands::chips_from_truth(chips_dir, truth)?;
            let params = OracleParams {
                jitter_sigma_px: *jitter,
                dropout: *dropout,
                spurious: *spurious,
                dark_threshold: cfg.dark_pixel_threshold,
            };
            let dets = commands::run_oracle(&chips, &params, rc.seed)?;
            io::write_bytes(out, to_jsonl(&dets).data("serializing detections")?.as_bytes())
                .data(out.display())
        }
        DetectorSpec::Command { template } => {
            let cmd = template
                .replace("{chips_dir}", &chips_dir.display().to_string())
                .replace("{out_jsonl}", &out.display().to_string());
            info!("running detector: {cmd}");
            let status = Process::new("sh")
                .arg("-c")
                .arg(&cmd)
                .status()
                .data(format!("launching `{cmd}`"))?;
            if !status.success() {
                return Err(Failure::Data(anyhow::anyhow!("detector `{cmd}` exited with {status}")));
            }
            if !out.is_file() {
                return Err(Failure::Data(anyhow::anyhow!(
                    "detector did not write {}",
                    out.display()
                )));
            }
            Ok(())
        }
    }
}
