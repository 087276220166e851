use std::path::{Path, PathBuf};

use clap::Args;
use log::info;
use offshore_core::detection::{parse_jsonl, to_jsonl, Detection, RawDetection};
use offshore_core::evaluate::{
    labels_for_chip, match_detections, oracle_detector, render_table, EvalReport, GroundTruthSet,
    OracleChip, OracleParams,
};
use offshore_core::io;
use offshore_core::label::parse_labels;
use offshore_core::postprocess::{export_geojson, parse_geojson, postprocess_run, ChipStore};
use offshore_core::preprocess::{chip_tile, make_grid, median_composite, quantize_db, write_chips};
use offshore_core::synthgen::{
    generate_dataset, load_backgrounds, procedural_background, write_dataset, BackgroundParams,
    GenerationManifest, SynthConfig,
};
use offshore_core::{GeoTransform, ObjectClass, PipelineConfig, PixelBBox, Raster8, RasterF};

use crate::failure::{require_dir, require_file, CliResult, Classify, Failure};

#[derive(Args, Debug)]
pub struct CompositeArgs {
    /// PFM rasters, or directories holding them.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Expand directories into their sorted `*.pfm` files.
pub fn collect_stack(inputs: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            files.extend(io::list_files(p, "pfm").data(format!("listing {}", p.display()))?);
        } else {
            require_file(p)?;
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(Failure::usage("no PFM rasters in the given inputs"));
    }
    Ok(files)
}

pub fn composite_files(files: &[PathBuf]) -> CliResult<RasterF> {
    let stack = files
        .iter()
        .map(|f| io::read_pfm(f).data(format!("reading {}", f.display())))
        .collect::<CliResult<Vec<_>>>()?;
    median_composite(&stack).data("median composite")
}

pub fn composite(a: &CompositeArgs) -> CliResult {
    let files = collect_stack(&a.inputs)?;
    let out = composite_files(&files)?;
    io::write_pfm(&a.out, &out).data("writing composite")?;
    info!("composited {} rasters into {}", files.len(), a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct QuantizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn quantize(a: &QuantizeArgs, cfg: &PipelineConfig) -> CliResult {
    require_file(&a.input)?;
    let r = io::read_pfm(&a.input).data(format!("reading {}", a.input.display()))?;
    let q = quantize_db(&r, cfg).data("quantization")?;
    io::write_pgm(&a.out, &q).data("writing quantized raster")
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Region of interest in planar metres: x0,y0,x1,y1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub roi: Vec<f64>,
    /// Output JSON (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn grid(a: &GridArgs, cfg: &PipelineConfig) -> CliResult {
    let roi: [f64; 4] = a
        .roi
        .clone()
        .try_into()
        .map_err(|_| Failure::usage("--roi needs four values"))?;
    let tiles = make_grid(roi, cfg).usage("invalid region of interest")?;
    match &a.out {
        Some(p) => io::write_json(p, &tiles).data("writing grid"),
        None => {
            let text = serde_json::to_string_pretty(&tiles).data("serializing grid")?;
            println!("{text}");
            Ok(())
        }
    }
}

#[derive(Args, Debug)]
pub struct ChipArgs {
    /// Quantized tile (PGM).
    #[arg(long)]
    pub tile: PathBuf,
    /// Tile pixel-to-map transform: a,b,c,d,e,f.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub geotransform: Vec<f64>,
    /// Defaults to the tile file stem.
    #[arg(long)]
    pub tile_id: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_geotransform(v: &[f64]) -> CliResult<GeoTransform> {
    let [a, b, c, d, e, f]: [f64; 6] = v
        .try_into()
        .map_err(|_| Failure::usage("geotransform needs six values"))?;
    GeoTransform::new(a, b, c, d, e, f).usage("invalid geotransform")
}

pub fn chip_raster(
    raster: &Raster8,
    gt: &GeoTransform,
    tile_id: &str,
    out: &Path,
    cfg: &PipelineConfig,
) -> CliResult<usize> {
    let chips = chip_tile(raster, gt, tile_id, cfg).data(format!("chipping tile {tile_id}"))?;
    write_chips(out, &chips).data(format!("writing chips to {}", out.display()))?;
    Ok(chips.len())
}

pub fn chip(a: &ChipArgs, cfg: &PipelineConfig) -> CliResult {
    require_file(&a.tile)?;
    let gt = parse_geotransform(&a.geotransform)?;
    let raster = io::read_pgm(&a.tile).data(format!("reading {}", a.tile.display()))?;
    let tile_id = match &a.tile_id {
        Some(id) => id.clone(),
        None => a
            .tile
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("tile")
            .to_string(),
    };
    let n = chip_raster(&raster, &gt, &tile_id, &a.out, cfg)?;
    info!("wrote {n} chips for {tile_id}");
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Generation manifest JSON (see `balance`).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory of background PGMs with optional `{stem}.land.pgm` masks.
    #[arg(long, conflicts_with = "procedural")]
    pub backgrounds: Option<PathBuf>,
    /// Use this many procedural backgrounds instead.
    #[arg(long)]
    pub procedural: Option<u64>,
    /// Side of procedural backgrounds in pixels.
    #[arg(long, default_value_t = 640)]
    pub size: usize,
    /// Generator settings JSON; defaults otherwise.
    #[arg(long)]
    pub synth_config: Option<PathBuf>,
    /// Overrides the manifest seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn synth(a: &SynthArgs, cfg: &PipelineConfig) -> CliResult {
    require_file(&a.manifest)?;
    let manifest: GenerationManifest =
        io::read_json(&a.manifest).usage(format!("invalid manifest {}", a.manifest.display()))?;
    manifest.validate().usage("invalid manifest")?;
    let synth_cfg: SynthConfig = match &a.synth_config {
        Some(p) => {
            require_file(p)?;
            io::read_json(p).usage(format!("invalid synth config {}", p.display()))?
        }
        None => SynthConfig::default(),
    };
    let seed = a.seed.unwrap_or(manifest.seed);
    let backgrounds = match (&a.backgrounds, a.procedural) {
        (Some(dir), _) => {
            require_dir(dir)?;
            load_backgrounds(dir, cfg).data("loading backgrounds")?
        }
        (None, Some(n)) => (0..n)
            .map(|i| {
                procedural_background(a.size, a.size, &BackgroundParams::default(), cfg, seed ^ i.wrapping_mul(0x9e37))
                    .data("procedural background")
            })
            .collect::<CliResult<_>>()?,
        (None, None) => return Err(Failure::usage("give --backgrounds <dir> or --procedural <n>")),
    };
    let scenes = generate_dataset(&manifest, &backgrounds, &synth_cfg, seed).data("generation")?;
    write_dataset(&a.out, &scenes).data("writing dataset")?;
    let labels: usize = scenes.iter().map(|s| s.labels.len()).sum();
    println!("{} scenes, {labels} labels", scenes.len());
    Ok(())
}

#[derive(Args, Debug)]
pub struct BalanceArgs {
    /// Real label counts per class id: single,cluster,turbine.
    #[arg(long, value_delimiter = ',')]
    pub real: Vec<u64>,
    /// Target counts per class id.
    #[arg(long, value_delimiter = ',')]
    pub target: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output manifest (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn balance(a: &BalanceArgs) -> CliResult {
    let three = |v: &[u64], flag: &str| -> CliResult<[u64; 3]> {
        v.try_into()
            .map_err(|_| Failure::usage(format!("{flag} needs three counts")))
    };
    let m = offshore_core::synthgen::balance_manifest(three(&a.real, "--real")?, three(&a.target, "--target")?, a.seed);
    match &a.out {
        Some(p) => io::write_json(p, &m).data("writing manifest"),
        None => {
            println!("{}", serde_json::to_string_pretty(&m).data("serializing manifest")?);
            Ok(())
        }
    }
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Directory of `{chip}.pgm` images with `{chip}.txt` labels.
    #[arg(long, conflicts_with_all = ["chips", "gt"])]
    pub labels: Option<PathBuf>,
    /// Chip directory (PGM + JSON sidecars); labels come from `--gt`.
    #[arg(long, requires = "gt")]
    pub chips: Option<PathBuf>,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dropout: f64,
    #[arg(long, default_value_t = 0.05)]
    pub spurious: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

type LabeledChip = (String, Raster8, Vec<(ObjectClass, PixelBBox)>);

fn chips_from_label_dir(dir: &Path) -> CliResult<Vec<LabeledChip>> {
    require_dir(dir)?;
    let mut out = Vec::new();
    for txt in io::list_files(dir, "txt").data("listing labels")? {
        let stem = txt.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let img_path = txt.with_extension("pgm");
        let raster = io::read_pgm(&img_path).data(format!("reading {}", img_path.display()))?;
        let text = io::read_string(&txt).data("reading labels")?;
        let labels = parse_labels(&text)
            .data(format!("parsing {}", txt.display()))?
            .iter()
            .map(|l| Ok((l.class, l.to_pixel_box(raster.width(), raster.height())?)))
            .collect::<offshore_core::Result<Vec<_>>>()
            .data(format!("label boxes in {}", txt.display()))?;
        out.push((stem, raster, labels));
    }
    Ok(out)
}

pub fn chips_from_truth(store_dir: &Path, gts: &GroundTruthSet) -> CliResult<Vec<LabeledChip>> {
    require_dir(store_dir)?;
    let mut out = Vec::new();
    for side in io::list_files(store_dir, "json").data("listing chips")? {
        let sidecar: offshore_core::preprocess::ChipSidecar =
            io::read_json(&side).data(format!("reading {}", side.display()))?;
        let raster = io::read_pgm(&store_dir.join(format!("{}.pgm", sidecar.chip_id)))
            .data(format!("reading chip {}", sidecar.chip_id))?;
        let labels = labels_for_chip(gts, &sidecar.chip_id, &sidecar.geotransform, raster.width(), raster.height())
            .data(format!("projecting ground truth onto {}", sidecar.chip_id))?;
        out.push((sidecar.chip_id, raster, labels));
    }
    Ok(out)
}

pub fn run_oracle(chips: &[LabeledChip], params: &OracleParams, seed: u64) -> CliResult<Vec<RawDetection>> {
    let views: Vec<OracleChip> = chips
        .iter()
        .map(|(id, raster, labels)| OracleChip {
            chip_id: id,
            raster,
            labels,
        })
        .collect();
    oracle_detector(&views, params, seed).usage("oracle detector")
}

pub fn read_truth(path: &Path) -> CliResult<GroundTruthSet> {
    require_file(path)?;
    let text = io::read_string(path).data("reading ground truth")?;
    GroundTruthSet::parse_jsonl(&text).data(format!("parsing {}", path.display()))
}

pub fn oracle_detect(a: &OracleArgs, cfg: &PipelineConfig) -> CliResult {
    let chips = match (&a.labels, &a.chips, &a.gt) {
        (Some(dir), _, _) => chips_from_label_dir(dir)?,
        (None, Some(dir), Some(gt)) => chips_from_truth(dir, &read_truth(gt)?)?,
        _ => return Err(Failure::usage("give --labels <dir> or --chips <dir> with --gt <jsonl>")),
    };
    let params = OracleParams {
        jitter_sigma_px: a.jitter,
        dropout: a.dropout,
        spurious: a.spurious,
        dark_threshold: cfg.dark_pixel_threshold,
    };
    let dets = run_oracle(&chips, &params, a.seed)?;
    io::write_bytes(&a.out, to_jsonl(&dets).data("serializing detections")?.as_bytes())
        .data("writing detections")?;
    info!("{} detections over {} chips", dets.len(), chips.len());
    Ok(())
}

#[derive(Args, Debug)]
pub struct PostprocessArgs {
    /// Detector output, JSON Lines.
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub chips: PathBuf,
    /// GeoJSON output.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn postprocess_files(detections: &Path, chips: &Path, out: &Path, cfg: &PipelineConfig) -> CliResult<Vec<Detection>> {
    require_file(detections)?;
    require_dir(chips)?;
    let text = io::read_string(detections).data("reading detections")?;
    let raw = parse_jsonl(&text).data(format!("parsing {}", detections.display()))?;
    let store = ChipStore::load_dir(chips).data("loading chips")?;
    let kept = postprocess_run(&raw, &store, cfg).data("postprocessing")?;
    io::write_bytes(out, export_geojson(&kept).data("GeoJSON export")?.as_bytes()).data("writing GeoJSON")?;
    info!("{} raw detections -> {} kept", raw.len(), kept.len());
    Ok(kept)
}

pub fn postprocess(a: &PostprocessArgs, cfg: &PipelineConfig) -> CliResult {
    postprocess_files(&a.detections, &a.chips, &a.out, cfg).map(|_| ())
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// GeoJSON from `postprocess`, or raw detector JSON Lines (`.jsonl`).
    #[arg(long)]
    pub preds: PathBuf,
    /// Ground truth, JSON Lines.
    #[arg(long)]
    pub gt: PathBuf,
    /// Merge single platforms and clusters before scoring.
    #[arg(long)]
    pub merge: bool,
    /// Report JSON output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Dataset label for the table.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Model label for the table.
    #[arg(long)]
    pub model: Option<String>,
}

pub fn read_predictions(path: &Path) -> CliResult<Vec<Detection>> {
    require_file(path)?;
    let text = io::read_string(path).data("reading predictions")?;
    if path.extension().and_then(|e| e.to_str()) == Some("jsonl") {
        parse_jsonl(&text)
            .and_then(|raw| {
                raw.iter()
                    .enumerate()
                    .map(|(i, r)| Detection::from_raw(i as u64, r))
                    .collect()
            })
            .data(format!("parsing {}", path.display()))
    } else {
        parse_geojson(&text).data(format!("parsing {}", path.display()))
    }
}

pub fn evaluate_files(
    preds: &[Detection],
    gts: &GroundTruthSet,
    cfg: &PipelineConfig,
    merge: bool,
) -> CliResult<EvalReport> {
    let report = match_detections(preds, gts, cfg).data("matching")?;
    Ok(EvalReport::from_report(&report, merge))
}

pub fn evaluate(a: &EvaluateArgs, cfg: &PipelineConfig) -> CliResult {
    let preds = read_predictions(&a.preds)?;
    let gts = read_truth(&a.gt)?;
    let mut report = evaluate_files(&preds, &gts, cfg, a.merge)?;
    report.dataset = a.dataset.clone();
    report.model = a.model.clone();
    if let Some(p) = &a.report {
        io::write_json(p, &report).data("writing report")?;
    }
    print!("{}", render_table(&report));
    Ok(())
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Report JSON written by `evaluate` or `pipeline`.
    pub report: PathBuf,
}

pub fn report(a: &ReportArgs) -> CliResult {
    require_file(&a.report)?;
    let text = io::read_string(&a.report).data("reading report")?;
    let report = EvalReport::parse(&text).usage(format!("malformed report {}", a.report.display()))?;
    print!("{}", render_table(&report));
    if let Some(cm) = &report.confusion {
        println!();
        print!("{}", render_confusion(cm));
    }
    Ok(())
}

/// Rows of GT classes with counts and row percentages, then the
/// background-FP row as raw counts.
fn render_confusion(cm: &offshore_core::evaluate::ConfusionMatrix) -> String {
    let mut out = format!("{:<18}", "GT \\ predicted");
    for c in &cm.classes {
        out.push_str(&format!(" {:>18}", c.name()));
    }
    out.push_str(&format!(" {:>18}\n", "background FN"));
    for (i, c) in cm.classes.iter().enumerate() {
        out.push_str(&format!("{:<18}", c.name()));
        for (v, p) in cm.counts[i].iter().zip(&cm.percent[i]) {
            out.push_str(&format!(" {:>10} {:>6.1}%", v, p));
        }
        out.push('\n');
    }
    out.push_str(&format!("{:<18}", "background FP"));
    for v in &cm.background_fp {
        out.push_str(&format!(" {v:>18}"));
    }
    out.push('\n');
    out
}
