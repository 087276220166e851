//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails, except for the single documented
//! published-table cell that no formula can reproduce (see README).

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use offshore_core::class::EvalClass;
use offshore_core::detection::Detection;
use offshore_core::evaluate::{
    confusion_matrix, evaluate_run, match_detections, ClassCounts, ClassMetrics, GroundTruth,
    GroundTruthSet, MatchReport, OracleChip, OracleParams,
};
use offshore_core::geometry::{geolocate, GeoBBox, GeoTransform, PixelBBox};
use offshore_core::io::encode_pgm;
use offshore_core::label::format_labels;
use offshore_core::postprocess::{group_overlaps, postprocess_run, ChipEntry, ChipStore};
use offshore_core::preprocess::{chip_tile, dequantize_value, median_composite, quantize_db, quantize_value};
use offshore_core::synthgen::{
    balance_manifest, generate_dataset, procedural_background, Background, BackgroundParams,
    SynthConfig, SynthScene,
};
use offshore_core::{ObjectClass, PipelineConfig, Raster8, RasterF};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    /// Failing items, used to recognise the documented unreachable cell.
    failures: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            failures: Vec::new(),
        }
    }
}

type Check = fn() -> Outcome;

/// The only tolerated failure: the split 10n platform F1 cell, printed as
/// 0.84 while its counts give 0.8458.
const DOCUMENTED_FAILURES: &[(usize, &str)] = &[(1, "split 10n platform: f1 0.8458 vs 0.84")];

fn main() {
    let checks: [(usize, &str, Check); 9] = [
        (1, "published metric table reproduces from counts", metric_table),
        (2, "final-model confusion percentages", confusion_percentages),
        (3, "quantization anchor at 150", quantization_anchor),
        (4, "chipping coverage, overlap and geotransforms", chipping_coverage),
        (5, "dedup grouping equals brute-force oracle", dedup_oracle),
        (6, "synthetic generation contract", synthetic_contract),
        (7, "closed-loop pipeline recall and precision", closed_loop),
        (8, "median composite removes transients", median_transients),
        (9, "greedy matching equals exhaustive assignment", greedy_oracle),
    ];
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());

    let mut unexpected = 0;
    for (id, name, check) in checks {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t = Instant::now();
        let out = check();
        let documented = !out.pass
            && !out.failures.is_empty()
            && out
                .failures
                .iter()
                .all(|f| DOCUMENTED_FAILURES.contains(&(id, f.as_str())));
        let status = if out.pass { "PASS" } else { "FAIL" };
        let note = if documented { " [documented]" } else { "" };
        println!(
            "{status} criterion {id}: {name} ({:.2}s): {}{note}",
            t.elapsed().as_secs_f64(),
            out.detail
        );
        if !out.pass && !documented {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criterion(s) failed");
        std::process::exit(1);
    }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// Run `f` on a single worker thread.
fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

// ---- 1 ---------------------------------------------------------------------

struct TableRow {
    label: &'static str,
    counts: [u64; 4],
    printed: [f64; 3],
}

const fn row(label: &'static str, counts: [u64; 4], printed: [f64; 3]) -> TableRow {
    TableRow { label, counts, printed }
}

/// (GT, TP, FP, FN) and printed (Pr, Rc, F1) for every distinct row of the
/// published experiment table.
const TABLE: &[TableRow] = &[
    row("base 10n platform", [3960, 3537, 1115, 423], [0.76, 0.89, 0.82]),
    row("split 10n single platform", [3530, 2983, 509, 547], [0.85, 0.85, 0.85]),
    row("split 10n platform cluster", [430, 173, 223, 257], [0.44, 0.40, 0.42]),
    row("split 10n platform", [3960, 3319, 569, 641], [0.85, 0.84, 0.84]),
    row("split 11n single platform", [3530, 3011, 552, 519], [0.85, 0.85, 0.85]),
    row("split 11n platform cluster", [430, 274, 479, 156], [0.36, 0.64, 0.46]),
    row("split 11n platform", [3960, 3475, 841, 485], [0.81, 0.88, 0.84]),
    row("split 10s single platform", [3530, 3025, 567, 505], [0.84, 0.86, 0.85]),
    row("split 10s platform cluster", [430, 210, 242, 220], [0.46, 0.49, 0.48]),
    row("split 10s platform", [3960, 3387, 657, 573], [0.84, 0.86, 0.85]),
    row("cluster-enriched single platform", [3530, 3036, 419, 494], [0.88, 0.86, 0.87]),
    row("cluster-enriched platform cluster", [430, 240, 63, 190], [0.79, 0.56, 0.65]),
    row("cluster-enriched platform", [3960, 3412, 346, 548], [0.91, 0.86, 0.88]),
    row("fully balanced single platform", [3530, 3083, 438, 447], [0.88, 0.87, 0.87]),
    row("fully balanced platform cluster", [430, 255, 95, 175], [0.73, 0.59, 0.65]),
    row("fully balanced platform", [3960, 3523, 348, 437], [0.91, 0.89, 0.90]),
    row("synthetic-only single platform", [3530, 11, 54, 3519], [0.17, 0.00, 0.01]),
    row("synthetic-only platform cluster", [430, 0, 0, 430], [0.00, 0.00, 0.00]),
    row("synthetic-only platform", [3960, 13, 52, 3947], [0.20, 0.00, 0.01]),
];

fn metric_table() -> Outcome {
    let t = Instant::now();
    let mut failures = Vec::new();
    let mut cells = 0;
    for r in TABLE {
        let [gt, tp, fp, fn_] = r.counts;
        let m = ClassMetrics::from_counts(EvalClass::Platform, ClassCounts { gt, tp, fp, fn_ });
        for (name, got, want) in [
            ("pr", m.precision, r.printed[0]),
            ("rc", m.recall, r.printed[1]),
            ("f1", m.f1, r.printed[2]),
        ] {
            cells += 1;
            if (got - want).abs() > 0.005 {
                failures.push(format!("{}: {name} {got:.4} vs {want:.2}", r.label));
            }
        }
    }
    let fast = within(t.elapsed(), 1.0);
    let mut out = Outcome::new(
        failures.is_empty() && fast,
        format!(
            "{}/{cells} cells within ±0.005{}",
            cells - failures.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; off: {}", failures.join(", "))
            }
        ),
    );
    if !fast {
        failures.push("runtime".into());
    }
    out.failures = failures;
    out
}

// ---- 2 ---------------------------------------------------------------------

fn confusion_percentages() -> Outcome {
    let report = MatchReport::from_confusion(
        &EvalClass::MERGED,
        vec![vec![3523, 15], vec![36, 4783]],
        vec![422, 130],
        vec![312, 80],
    )
    .expect("report");
    let cm = confusion_matrix(&report, true);
    let expect = [
        (0, 0, 89.0),
        (0, 1, 0.4),
        (0, 2, 10.7),
        (1, 0, 0.7),
        (1, 1, 96.6),
        (1, 2, 2.6),
    ];
    let bad: Vec<String> = expect
        .iter()
        .filter(|&&(r, c, want)| (cm.percent[r][c] - want).abs() > 0.05)
        .map(|&(r, c, want)| format!("[{r}][{c}] {:.3} vs {want}", cm.percent[r][c]))
        .collect();
    let totals_ok = cm.row_totals == [3960, 4949];
    Outcome::new(
        bad.is_empty() && totals_ok,
        format!(
            "platform {:.2}%, wind turbine {:.2}%{}",
            cm.percent[0][0],
            cm.percent[1][1],
            if bad.is_empty() { String::new() } else { format!("; off: {}", bad.join(", ")) }
        ),
    )
}

// ---- 3 ---------------------------------------------------------------------

fn quantization_anchor() -> Outcome {
    let cfg = PipelineConfig::default();
    let q = quantize_value(-16.47, &cfg);
    let back = dequantize_value(150, &cfg);
    let raster = RasterF::new(3, 1, vec![-40.0, 0.0, -16.47], None).expect("raster");
    let rq = quantize_db(&raster, &cfg).expect("quantize");
    let ok = q == 150
        && (-16.6..=-16.4).contains(&back)
        && rq.values() == [0, 255, 150];
    Outcome::new(
        ok,
        format!("q(-16.47 dB) = {q}, q^-1(150) = {back:.3} dB, endpoints {:?}", &rq.values()[..2]),
    )
}

// ---- 4 ---------------------------------------------------------------------

fn chipping_coverage() -> Outcome {
    let cfg = PipelineConfig::default();
    let size = cfg.chip_size;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut problems = Vec::new();
    for case in 0..500 {
        let (w, h) = (rng.random_range(640..=4096usize), rng.random_range(640..=4096usize));
        // dyadic coefficients keep every mapped coordinate exact
        let gt = GeoTransform::new(
            rng.random_range(-1024..1024) as f64 / 64.0,
            1.0 / 1024.0,
            if case % 2 == 0 { 0.0 } else { 1.0 / 4096.0 },
            rng.random_range(-512..512) as f64 / 64.0,
            if case % 2 == 0 { 0.0 } else { -1.0 / 8192.0 },
            -1.0 / 1024.0,
        )
        .expect("geotransform");
        let tile = Raster8::filled(w, h, 0).expect("raster");
        let chips = chip_tile(&tile, &gt, "t", &cfg).expect("chips");

        let xs: BTreeSet<usize> = chips.iter().map(|c| c.offset_px.0).collect();
        let ys: BTreeSet<usize> = chips.iter().map(|c| c.offset_px.1).collect();
        if chips.len() != xs.len() * ys.len() {
            problems.push(format!("{w}x{h}: chips do not form a grid"));
            continue;
        }
        // chips form a full grid, so 2-D coverage is the product of 1-D coverage
        for (axis, anchors, dim) in [("x", &xs, w), ("y", &ys, h)] {
            let a: Vec<usize> = anchors.iter().copied().collect();
            let covered = a[0] == 0
                && a.last().map(|l| l + size) == Some(dim)
                && a.windows(2).all(|p| p[1] <= p[0] + size);
            if !covered {
                problems.push(format!("{w}x{h}: gap along {axis}"));
            }
            // interior neighbours: every pair except one involving the snapped last chip
            let interior = &a[..a.len().saturating_sub(1)];
            if interior.windows(2).any(|p| p[0] + size - p[1] != 128) {
                problems.push(format!("{w}x{h}: interior overlap along {axis} is not 128"));
            }
        }
        for chip in &chips {
            let (ox, oy) = (chip.offset_px.0 as f64, chip.offset_px.1 as f64);
            for (c, r) in [(0.0, 0.0), (640.0, 640.0), (17.0, 333.0), (639.0, 1.0)] {
                if chip.geotransform.apply(c, r) != gt.apply(c + ox, r + oy) {
                    problems.push(format!("{w}x{h}: chip {} maps ({c}, {r}) inexactly", chip.chip_id));
                    break;
                }
            }
            if chip.raster.dims() != (size, size) {
                problems.push(format!("{w}x{h}: chip {} has wrong size", chip.chip_id));
            }
        }
    }
    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            "500 tile sizes fully covered, 128 px interior overlap, exact geotransforms".into()
        } else {
            format!("{} problems, first: {}", problems.len(), problems[0])
        },
    )
}

// ---- 5 ---------------------------------------------------------------------

fn geo_det(id: u64, b: [f64; 4]) -> Detection {
    Detection {
        id,
        chip_id: "c".into(),
        class: ObjectClass::SinglePlatform,
        confidence: 0.9,
        box_px: PixelBBox::new(0.0, 0.0, 1.0, 1.0).expect("box"),
        box_geo: Some(GeoBBox::new(b[0], b[1], b[2], b[3]).expect("geo box")),
    }
}

fn random_overlap_set(rng: &mut ChaCha8Rng) -> Vec<Detection> {
    let n = rng.random_range(1..=50);
    let mut boxes: Vec<[f64; 4]> = Vec::with_capacity(n);
    while boxes.len() < n {
        match rng.random_range(0..3) {
            // scattered
            0 => {
                let (x, y) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                let s = rng.random_range(0.01..0.06);
                boxes.push([x, y, x + s, y + s]);
            }
            // clump around a point
            1 => {
                let (x, y) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                for _ in 0..rng.random_range(2..6) {
                    let s = rng.random_range(0.02..0.04);
                    let (dx, dy) = (rng.random_range(-0.015..0.015), rng.random_range(-0.015..0.015));
                    boxes.push([x + dx, y + dy, x + dx + s, y + dy + s]);
                }
            }
            // transitive chain: neighbours overlap, ends do not
            _ => {
                let (mut x, y) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                let s = 0.03;
                for _ in 0..rng.random_range(3..8) {
                    boxes.push([x, y, x + s, y + s]);
                    x += s * rng.random_range(0.3..0.75);
                }
            }
        }
    }
    boxes.truncate(n);
    boxes
        .into_iter()
        .enumerate()
        .map(|(i, b)| geo_det(i as u64, b))
        .collect()
}

/// Components of the "IoU >= threshold" graph by exhaustive pair checks and
/// depth-first search.
fn brute_force_groups(dets: &[Detection], threshold: f64) -> BTreeSet<Vec<u64>> {
    let n = dets.len();
    let geo: Vec<GeoBBox> = dets.iter().map(|d| d.box_geo.expect("geo")).collect();
    let mut seen = vec![false; n];
    let mut groups = BTreeSet::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut members = Vec::new();
        seen[start] = true;
        while let Some(i) = stack.pop() {
            members.push(dets[i].id);
            for j in 0..n {
                if !seen[j] && geo[i].iou(&geo[j]) >= threshold {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        groups.insert(members);
    }
    groups
}

fn dedup_oracle() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut chained = 0;
    for _ in 0..200 {
        let dets = random_overlap_set(&mut rng);
        let got: BTreeSet<Vec<u64>> = group_overlaps(&dets, &cfg)
            .expect("groups")
            .into_iter()
            .map(|g| {
                let mut ids: Vec<u64> = g.members.iter().map(|d| d.id).collect();
                ids.sort_unstable();
                ids
            })
            .collect();
        let want = brute_force_groups(&dets, cfg.dedup_iou);
        if got != want {
            mismatches += 1;
        }
        // count sets containing a group whose ends do not overlap directly
        let geo = |id: u64| dets[id as usize].box_geo.expect("geo");
        if want.iter().any(|g| {
            g.iter()
                .any(|&a| g.iter().any(|&b| geo(a).iou(&geo(b)) < cfg.dedup_iou))
        }) {
            chained += 1;
        }
    }
    Outcome::new(
        mismatches == 0 && chained > 0,
        format!("200 sets, {mismatches} mismatches, {chained} with transitive-only links"),
    )
}

// ---- 6 ---------------------------------------------------------------------

fn backgrounds(n: u64, cfg: &PipelineConfig) -> Vec<Background> {
    (0..n)
        .map(|s| procedural_background(640, 640, &BackgroundParams::default(), cfg, 1000 + s).expect("background"))
        .collect()
}

fn scene_bytes(scenes: &[SynthScene]) -> Vec<u8> {
    let mut out = Vec::new();
    for s in scenes {
        out.extend(encode_pgm(&s.image));
        out.extend(format_labels(&s.labels).into_bytes());
    }
    out
}

/// Every pixel the scene changed belongs to an object's footprint, and every
/// footprint pixel that rose above the background lies inside that object's
/// written label box.
fn containment_failures(scene: &SynthScene, bg: &Background) -> usize {
    let (w, h) = scene.image.dims();
    let boxes = scene.label_boxes().expect("label boxes");
    let mut owned = vec![false; w * h];
    let mut failures = 0;
    for (obj, b) in scene.objects.iter().zip(&boxes) {
        for p in obj.footprint(w, h).expect("footprint") {
            if p.value <= bg.image.get(p.x, p.y) {
                continue;
            }
            owned[p.y * w + p.x] = true;
            let tol = 1e-3;
            let inside = p.x as f64 >= b.x0 - tol
                && p.y as f64 >= b.y0 - tol
                && (p.x + 1) as f64 <= b.x1 + tol
                && (p.y + 1) as f64 <= b.y1 + tol;
            if !inside {
                failures += 1;
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            if scene.image.get(x, y) != bg.image.get(x, y) && !owned[y * w + x] {
                failures += 1;
            }
        }
    }
    failures
}

fn synthetic_contract() -> Outcome {
    let cfg = PipelineConfig::default();
    let bgs = backgrounds(8, &cfg);
    let manifest = balance_manifest([2330, 271, 2920], [2330, 2477, 2920], 6);
    let synth = SynthConfig::default();

    let t = Instant::now();
    let scenes = single_threaded(|| generate_dataset(&manifest, &bgs, &synth, 6));
    let elapsed = t.elapsed();
    let scenes = match scenes {
        Ok(s) => s,
        Err(e) => return Outcome::new(false, format!("generation failed: {e}")),
    };

    let clusters = scenes
        .iter()
        .flat_map(|s| &s.labels)
        .filter(|l| l.class == ObjectClass::PlatformCluster)
        .count();
    let labels: usize = scenes.iter().map(|s| s.labels.len()).sum();
    let contained = scenes
        .iter()
        .map(|s| containment_failures(s, &bgs[s.background_index]))
        .sum::<usize>();
    let off_sea = scenes
        .iter()
        .flat_map(|s| s.objects.iter().map(move |o| (s, o)))
        .filter(|(s, o)| !s.entity_map.is_sea(o.anchor.0, o.anchor.1))
        .count();
    let rerun = generate_dataset(&manifest, &bgs, &synth, 6).expect("rerun");
    let identical = scene_bytes(&scenes) == scene_bytes(&rerun);

    Outcome::new(
        clusters == 2206 && labels == 2206 && contained == 0 && off_sea == 0 && identical && within(elapsed, 120.0),
        format!(
            "{clusters} cluster labels in {} scenes, {contained} containment failures, {off_sea} off-sea anchors, rerun identical: {identical}, generation {:.1}s",
            scenes.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// ---- 7 ---------------------------------------------------------------------

fn closed_loop() -> Outcome {
    let cfg = PipelineConfig::default();
    let t = Instant::now();
    let result = single_threaded(|| -> offshore_core::Result<(f64, f64, usize, usize)> {
        let bgs = backgrounds(6, &cfg);
        let synth = SynthConfig {
            objects_per_scene: (3, 3),
            ..SynthConfig::default()
        };
        let manifest = balance_manifest([0; 3], [200, 200, 200], 7);
        let scenes = generate_dataset(&manifest, &bgs, &synth, 7)?;

        // every scene becomes one geolocated chip
        let mut store = ChipStore::new();
        let mut gts = Vec::new();
        let mut chip_ids = Vec::new();
        let mut chip_labels = Vec::new();
        for (i, s) in scenes.iter().enumerate() {
            let chip_id = format!("scene_{i:03}");
            let gt = GeoTransform::north_up(-20.0 + (i % 20) as f64, 30.0 + (i / 20) as f64, 1e-4)?;
            let boxes: Vec<(ObjectClass, PixelBBox)> = s
                .labels
                .iter()
                .map(|l| Ok((l.class, l.to_pixel_box(640, 640)?)))
                .collect::<offshore_core::Result<_>>()?;
            for (c, b) in &boxes {
                gts.push(GroundTruth::geo(*c, &geolocate(b, &gt)?, "synthetic"));
            }
            store.insert(
                chip_id.clone(),
                ChipEntry {
                    raster: s.image.clone(),
                    geotransform: gt,
                },
            );
            chip_ids.push(chip_id);
            chip_labels.push(boxes);
        }
        let oracle_chips: Vec<OracleChip> = scenes
            .iter()
            .enumerate()
            .map(|(i, s)| OracleChip {
                chip_id: &chip_ids[i],
                raster: &s.image,
                labels: &chip_labels[i],
            })
            .collect();
        let raw = offshore_core::evaluate::oracle_detector(&oracle_chips, &OracleParams::default(), 7)?;
        let dets = postprocess_run(&raw, &store, &cfg)?;
        let gts = GroundTruthSet::new(gts)?;
        let eval = evaluate_run(&dets, &gts, &cfg, true)?;
        let (mut tp, mut fp, mut gt) = (0, 0, 0);
        for m in &eval.metrics {
            tp += m.tp;
            fp += m.fp;
            gt += m.gt;
        }
        let recall = tp as f64 / gt as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        Ok((recall, precision, raw.len(), dets.len()))
    });
    let elapsed = t.elapsed();
    match result {
        Ok((recall, precision, raw, kept)) => Outcome::new(
            recall >= 0.93 && precision >= 0.97 && within(elapsed, 60.0),
            format!("recall {recall:.4}, precision {precision:.4}, {raw} raw -> {kept} kept"),
        ),
        Err(e) => Outcome::new(false, format!("pipeline error: {e}")),
    }
}

// ---- 8 ---------------------------------------------------------------------

fn median_transients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut wrong = 0;
    for _ in 0..1000 {
        let background = rng.random_range(-30.0f32..-10.0);
        let hits = rng.random_range(0..=3);
        let mut values = [background; 7];
        for slot in rand::seq::index::sample(&mut rng, 7, hits) {
            values[slot] = rng.random_range(0.0f32..10.0);
        }
        let stack: Vec<RasterF> = values
            .iter()
            .map(|&v| RasterF::filled(1, 1, v).expect("raster"))
            .collect();
        let m = median_composite(&stack).expect("median");
        if m.get(0, 0) != background {
            wrong += 1;
        }
    }
    Outcome::new(wrong == 0, format!("1000 pixels, {wrong} differ from the background"))
}

// ---- 9 ---------------------------------------------------------------------

fn px_det(id: u64, conf: f64, b: [f64; 4]) -> Detection {
    Detection {
        id,
        chip_id: "c".into(),
        class: ObjectClass::ALL[(id % 3) as usize],
        confidence: conf,
        box_px: PixelBBox::new(b[0], b[1], b[2], b[3]).expect("box"),
        box_geo: None,
    }
}

/// Instance whose overlap graph is a union of stars: either one GT with
/// several candidate predictions, or one prediction with several candidate
/// GTs. Every non-zero IoU is at least 0.3 and all of them are distinct.
fn star_instance(rng: &mut ChaCha8Rng) -> (Vec<Detection>, GroundTruthSet) {
    let (mut preds, mut gts) = (Vec::new(), Vec::new());
    let mut slot = 0.0;
    let mut seen_iou: Vec<f64> = Vec::new();
    while preds.len() < 8 && gts.len() < 8 {
        let base = [slot, 0.0, slot + 20.0, 20.0];
        slot += 100.0;
        let spokes = rng.random_range(0..=3usize).min(8 - preds.len().max(gts.len()));
        let gt_centre = rng.random_bool(0.5);
        let mut candidates = vec![base];
        for _ in 0..spokes {
            // shifted copies: IoU = (20 - d) / (20 + d), at least 0.3 for d <= 10
            loop {
                let d = rng.random_range(0.0..10.0f64);
                let v = (20.0 - d) / (20.0 + d);
                if seen_iou.iter().all(|s| (s - v).abs() > 1e-6) {
                    seen_iou.push(v);
                    candidates.push([base[0] + d, 0.0, base[2] + d, 20.0]);
                    break;
                }
            }
        }
        if spokes == 0 {
            // isolated box on either side
            if gt_centre {
                gts.push(GroundTruth::px(ObjectClass::WindTurbine, &pbox(base), "c", "r"));
            } else {
                preds.push(px_det(preds.len() as u64, rng.random_range(0.0..1.0), base));
            }
            continue;
        }
        // the centre sits on one side, its spokes on the other
        if gt_centre {
            gts.push(GroundTruth::px(ObjectClass::SinglePlatform, &pbox(base), "c", "r"));
            for b in &candidates[1..] {
                preds.push(px_det(preds.len() as u64, rng.random_range(0.0..1.0), *b));
            }
        } else {
            preds.push(px_det(preds.len() as u64, rng.random_range(0.0..1.0), base));
            for b in &candidates[1..] {
                gts.push(GroundTruth::px(ObjectClass::PlatformCluster, &pbox(*b), "c", "r"));
            }
        }
    }
    (preds, GroundTruthSet::new(gts).expect("gts"))
}

fn pbox(b: [f64; 4]) -> PixelBBox {
    PixelBBox::new(b[0], b[1], b[2], b[3]).expect("box")
}

/// Score of an assignment: matches first, then which predictions are matched
/// taken in confidence order, then total IoU.
type Score = (usize, Vec<bool>, f64);

fn exhaustive_best(preds: &[Detection], gts: &GroundTruthSet, thr: f64) -> BTreeSet<(u64, usize)> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .total_cmp(&preds[a].confidence)
            .then(preds[a].id.cmp(&preds[b].id))
    });
    let iou = |p: usize, g: usize| {
        let a = preds[p].box_px.as_array();
        let b = gts.entries[g].bbox;
        offshore_core::iou(&pbox(a), &pbox(b))
    };

    #[allow(clippy::too_many_arguments)]
    fn search(
        k: usize,
        order: &[usize],
        m: usize,
        used: &mut Vec<bool>,
        current: &mut Vec<Option<usize>>,
        iou: &dyn Fn(usize, usize) -> f64,
        thr: f64,
        best: &mut Option<(Score, Vec<Option<usize>>)>,
    ) {
        if k == order.len() {
            let matched: Vec<bool> = current.iter().map(|c| c.is_some()).collect();
            let total: f64 = order
                .iter()
                .zip(current.iter())
                .filter_map(|(&p, c)| c.map(|g| iou(p, g)))
                .sum();
            let score = (matched.iter().filter(|&&m| m).count(), matched, total);
            let better = match best {
                None => true,
                Some((s, _)) => {
                    score.0 > s.0
                        || (score.0 == s.0 && score.1 > s.1)
                        || (score.0 == s.0 && score.1 == s.1 && score.2 > s.2)
                }
            };
            if better {
                *best = Some((score, current.clone()));
            }
            return;
        }
        let p = order[k];
        for g in 0..m {
            if !used[g] && iou(p, g) >= thr {
                used[g] = true;
                current.push(Some(g));
                search(k + 1, order, m, used, current, iou, thr, best);
                current.pop();
                used[g] = false;
            }
        }
        current.push(None);
        search(k + 1, order, m, used, current, iou, thr, best);
        current.pop();
    }

    let mut best = None;
    search(
        0,
        &order,
        gts.len(),
        &mut vec![false; gts.len()],
        &mut Vec::new(),
        &iou,
        thr,
        &mut best,
    );
    let (_, assignment) = best.expect("at least the empty assignment");
    order
        .iter()
        .zip(assignment)
        .filter_map(|(&p, g)| g.map(|g| (preds[p].id, g)))
        .collect()
}

fn greedy_oracle() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    let mut contested = 0;
    for _ in 0..100 {
        let (preds, gts) = star_instance(&mut rng);
        let report = match_detections(&preds, &gts, &cfg).expect("match");
        let greedy: BTreeSet<(u64, usize)> = report.pairs.iter().map(|p| (p.pred_id, p.gt_index)).collect();
        let best = exhaustive_best(&preds, &gts, cfg.eval_iou);
        if greedy != best {
            mismatches += 1;
        }
        if report.unmatched_preds.len() + report.unmatched_gts.len() > 0 && !report.pairs.is_empty() {
            contested += 1;
        }
    }
    Outcome::new(
        mismatches == 0,
        format!("100 instances, {mismatches} mismatches, {contested} with unmatched leftovers"),
    )
}
