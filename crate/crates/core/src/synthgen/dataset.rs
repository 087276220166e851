use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::class::ObjectClass;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::geometry::iou;
use crate::io;
use crate::label::format_labels;
use crate::raster::Raster8;

use super::anchors::make_anchor_grid;
use super::cluster::{gen_cluster_geometry, gen_point_geometry, ClusterParams};
use super::derive_rng;
use super::entity::{build_entity_map, screen_background, EntityMap};
use super::kernel::KernelRanges;
use super::scene::{place_object, Background, SynthObject, SynthScene};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassBalance {
    pub class_id: ObjectClass,
    pub real: u64,
    pub target: u64,
    pub synthetic: u64,
}

/// How many synthetic objects each class needs to reach its target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub classes: Vec<ClassBalance>,
    pub seed: u64,
}

impl GenerationManifest {
    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.classes.iter().enumerate() {
            if self.classes[..i].iter().any(|o| o.class_id == c.class_id) {
                return Err(Error::Parse(format!("manifest lists {} twice", c.class_id)));
            }
            if c.synthetic != c.target.saturating_sub(c.real) {
                return Err(Error::Parse(format!(
                    "manifest entry for {}: synthetic {} != max(0, {} - {})",
                    c.class_id, c.synthetic, c.target, c.real
                )));
            }
        }
        Ok(())
    }

    pub fn synthetic(&self, class: ObjectClass) -> u64 {
        self.classes
            .iter()
            .find(|c| c.class_id == class)
            .map_or(0, |c| c.synthetic)
    }

    pub fn total_synthetic(&self) -> u64 {
        self.classes.iter().map(|c| c.synthetic).sum()
    }
}

/// `synthetic = max(0, target - real)` per class, in class-id order.
pub fn balance_manifest(real: [u64; 3], target: [u64; 3], seed: u64) -> GenerationManifest {
    let classes = ObjectClass::ALL
        .iter()
        .map(|&class_id| {
            let i = class_id.id() as usize;
            ClassBalance {
                class_id,
                real: real[i],
                target: target[i],
                synthetic: target[i].saturating_sub(real[i]),
            }
        })
        .collect();
    GenerationManifest { classes, seed }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Inclusive range of objects per scene.
    pub objects_per_scene: (usize, usize),
    pub anchor_spacing: usize,
    pub anchor_jitter: f64,
    /// Backgrounds with any sea pixel at or above this value are discarded.
    pub reject_threshold: u8,
    /// Anchors tried per object before the scene is abandoned.
    pub retry_budget: usize,
    /// Fresh draws (background, anchors, geometry) per scene.
    pub scene_attempts: usize,
    pub cluster: ClusterParams,
    pub platform_kernels: KernelRanges,
    pub cluster_kernels: KernelRanges,
    pub turbine_kernels: KernelRanges,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            objects_per_scene: (1, 5),
            anchor_spacing: 96,
            anchor_jitter: 0.25,
            reject_threshold: 120,
            retry_budget: 20,
            scene_attempts: 16,
            cluster: ClusterParams::default(),
            platform_kernels: KernelRanges::platform(),
            cluster_kernels: KernelRanges {
                size_px: (7, 21),
                ..KernelRanges::platform()
            },
            turbine_kernels: KernelRanges::turbine(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.objects_per_scene;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidConfig(format!(
                "objects_per_scene range {lo}..={hi}"
            )));
        }
        if self.anchor_spacing == 0 || self.retry_budget == 0 || self.scene_attempts == 0 {
            return Err(Error::InvalidConfig(
                "anchor_spacing, retry_budget and scene_attempts must be positive".into(),
            ));
        }
        self.cluster.validate()
    }
}

const PLAN_STREAM: u64 = 1;
const SCENE_STREAM: u64 = 2;

/// Emit exactly `manifest.synthetic(c)` objects of every class, spread over
/// scenes of `objects_per_scene` objects each. Scene `i` draws from its own
/// RNG stream, so the result is independent of thread scheduling.
pub fn generate_dataset(
    manifest: &GenerationManifest,
    backgrounds: &[Background],
    cfg: &SynthConfig,
    seed: u64,
) -> Result<Vec<SynthScene>> {
    manifest.validate()?;
    cfg.validate()?;
    if manifest.total_synthetic() == 0 {
        return Ok(Vec::new());
    }
    let accepted: Vec<usize> = backgrounds
        .iter()
        .enumerate()
        .filter_map(|(i, bg)| {
            match screen_background(&bg.image, &bg.entity_map, cfg.reject_threshold) {
                Ok(true) => Some(Ok(i)),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            }
        })
        .collect::<Result<_>>()?;
    if accepted.is_empty() {
        return Err(Error::NoAcceptedBackgrounds);
    }

    let plan = plan_scenes(manifest, cfg, seed);
    plan.par_iter()
        .enumerate()
        .map(|(idx, classes)| generate_scene(idx, classes, backgrounds, &accepted, cfg, seed))
        .collect()
}

fn plan_scenes(manifest: &GenerationManifest, cfg: &SynthConfig, seed: u64) -> Vec<Vec<ObjectClass>> {
    let mut rng = derive_rng(seed, &[PLAN_STREAM]);
    let mut queue: Vec<ObjectClass> = ObjectClass::ALL
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c, manifest.synthetic(c) as usize))
        .collect();
    queue.shuffle(&mut rng);
    let mut scenes = Vec::new();
    let mut rest = queue.as_slice();
    while !rest.is_empty() {
        let n = rng
            .random_range(cfg.objects_per_scene.0..=cfg.objects_per_scene.1)
            .min(rest.len());
        scenes.push(rest[..n].to_vec());
        rest = &rest[n..];
    }
    scenes
}

fn generate_scene(
    idx: usize,
    classes: &[ObjectClass],
    backgrounds: &[Background],
    accepted: &[usize],
    cfg: &SynthConfig,
    seed: u64,
) -> Result<SynthScene> {
    'attempt: for attempt in 0..cfg.scene_attempts {
        let mut rng = derive_rng(seed, &[SCENE_STREAM, idx as u64, attempt as u64]);
        let bg_index = accepted[rng.random_range(0..accepted.len())];
        let bg = &backgrounds[bg_index];
        let (w, h) = bg.image.dims();
        let mut scene = SynthScene::new(bg, bg_index);
        let grid = make_anchor_grid(&bg.entity_map, cfg.anchor_spacing, cfg.anchor_jitter, rng.random());
        let mut anchors = grid.points;
        anchors.shuffle(&mut rng);

        for &class in classes {
            let (geometry, ranges) = match class {
                ObjectClass::PlatformCluster => {
                    (gen_cluster_geometry(&cfg.cluster, &mut rng)?, &cfg.cluster_kernels)
                }
                ObjectClass::SinglePlatform => (gen_point_geometry(class)?, &cfg.platform_kernels),
                ObjectClass::WindTurbine => (gen_point_geometry(class)?, &cfg.turbine_kernels),
            };
            let kernels = geometry
                .points
                .iter()
                .map(|_| ranges.sample(&mut rng))
                .collect::<Result<Vec<_>>>()?;

            let mut placed = false;
            for _ in 0..cfg.retry_budget {
                let Some(anchor) = anchors.pop() else { break };
                let rotation_deg = rng.random_range(0.0..360.0);
                let candidate = SynthObject {
                    class,
                    geometry: geometry.clone(),
                    anchor,
                    rotation_deg,
                    kernels: kernels.clone(),
                };
                // keep objects apart so every label box holds one object
                let Ok(bbox) = candidate.label_box(w, h) else { continue };
                if scene.label_boxes()?.iter().any(|b| iou(b, &bbox) > 0.0) {
                    continue;
                }
                match place_object(&mut scene, class, &geometry, anchor, rotation_deg, &kernels) {
                    Ok(()) => {
                        placed = true;
                        break;
                    }
                    Err(Error::PlacementRejected(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            if !placed {
                continue 'attempt;
            }
        }
        return Ok(scene);
    }
    Err(Error::GenerationFailed(format!(
        "scene {idx}: could not place {} objects in {} attempts",
        classes.len(),
        cfg.scene_attempts
    )))
}

/// `synth_{index:06}.pgm` plus `synth_{index:06}.txt` for every scene.
pub fn write_dataset(dir: &Path, scenes: &[SynthScene]) -> Result<()> {
    for (i, scene) in scenes.iter().enumerate() {
        io::write_pgm(&dir.join(format!("synth_{i:06}.pgm")), &scene.image)?;
        io::write_bytes(
            &dir.join(format!("synth_{i:06}.txt")),
            format_labels(&scene.labels).as_bytes(),
        )?;
    }
    Ok(())
}

/// Every `*.pgm` in `dir` is a background; an optional `{stem}.land.pgm`
/// next to it marks land with non-zero pixels (absent: all water).
pub fn load_backgrounds(dir: &Path, cfg: &PipelineConfig) -> Result<Vec<Background>> {
    let mut out = Vec::new();
    for path in io::list_files(dir, "pgm")? {
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or_default();
        if name.ends_with(".land.pgm") {
            continue;
        }
        let image = io::read_pgm(&path)?;
        let mask_path = path.with_extension("land.pgm");
        let mask = if mask_path.exists() {
            io::read_pgm(&mask_path)?
        } else {
            Raster8::filled(image.width(), image.height(), 0)?
        };
        if mask.dims() != image.dims() {
            return Err(Error::ShapeMismatch {
                expected: image.dims(),
                actual: mask.dims(),
            });
        }
        let entity_map: EntityMap = build_entity_map(&mask, cfg);
        out.push(Background { image, entity_map });
    }
    Ok(out)
}
