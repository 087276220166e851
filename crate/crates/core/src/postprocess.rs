//! Per-chip detections to one clean, georeferenced detection set:
//! confidence filter, dark-pixel filter, cross-chip deduplication by
//! geographic IoU, representative selection and GeoJSON export.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::class::ObjectClass;
use crate::config::PipelineConfig;
use crate::detection::{Detection, RawDetection};
use crate::error::{Error, Result};
use crate::geometry::{geolocate, GeoBBox, GeoTransform, PixelBBox};
use crate::io;
use crate::preprocess::{Chip, ChipSidecar};
use crate::raster::Raster8;
use crate::union_find::UnionFind;

#[derive(Debug, Clone, PartialEq)]
pub struct ChipEntry {
    pub raster: Raster8,
    pub geotransform: GeoTransform,
}

/// Chip rasters and geotransforms by chip id.
#[derive(Debug, Clone, Default)]
pub struct ChipStore {
    chips: HashMap<String, ChipEntry>,
}

impl ChipStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, chip_id: impl Into<String>, entry: ChipEntry) {
        self.chips.insert(chip_id.into(), entry);
    }

    pub fn get(&self, chip_id: &str) -> Result<&ChipEntry> {
        self.chips
            .get(chip_id)
            .ok_or_else(|| Error::UnknownChip(chip_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn from_chips(chips: &[Chip]) -> Self {
        let mut store = Self::new();
        for c in chips {
            store.insert(
                c.chip_id.clone(),
                ChipEntry {
                    raster: c.raster.clone(),
                    geotransform: c.geotransform,
                },
            );
        }
        store
    }

    /// Load every `{chip_id}.json` sidecar in `dir` with its `{chip_id}.pgm`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut store = Self::new();
        for path in io::list_files(dir, "json")? {
            let sidecar: ChipSidecar = io::read_json(&path)?;
            let raster = io::read_pgm(&dir.join(format!("{}.pgm", sidecar.chip_id)))?;
            store.insert(
                sidecar.chip_id,
                ChipEntry {
                    raster,
                    geotransform: sidecar.geotransform,
                },
            );
        }
        Ok(store)
    }
}

/// Detections overlapping transitively at `iou >= dedup_iou`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionGroup {
    pub members: Vec<Detection>,
    pub representative: usize,
}

impl DetectionGroup {
    pub fn representative(&self) -> &Detection {
        &self.members[self.representative]
    }
}

pub fn filter_confidence(dets: Vec<Detection>, cfg: &PipelineConfig) -> Vec<Detection> {
    dets.into_iter()
        .filter(|d| d.confidence >= cfg.conf_threshold)
        .collect()
}

/// Keep a detection only if some pixel whose centre lies inside its box
/// (clipped to the chip) reaches `dark_pixel_threshold`.
pub fn filter_dark(
    dets: Vec<Detection>,
    chips: &ChipStore,
    cfg: &PipelineConfig,
) -> Result<Vec<Detection>> {
    let mut out = Vec::with_capacity(dets.len());
    for d in dets {
        let chip = chips.get(&d.chip_id)?;
        if has_bright_pixel(&chip.raster, &d.box_px, cfg.dark_pixel_threshold) {
            out.push(d);
        }
    }
    Ok(out)
}

/// Pixel index range `[lo, hi)` whose centres fall in `[a, b)`.
fn centre_range(a: f64, b: f64, len: usize) -> (usize, usize) {
    let lo = (a - 0.5).ceil().max(0.0);
    let hi = (b - 0.5).ceil().max(0.0);
    ((lo as usize).min(len), (hi as usize).min(len))
}

pub fn has_bright_pixel(raster: &Raster8, b: &PixelBBox, threshold: u8) -> bool {
    let (x0, x1) = centre_range(b.x0, b.x1, raster.width());
    let (y0, y1) = centre_range(b.y0, b.y1, raster.height());
    (y0..y1).any(|y| (x0..x1).any(|x| raster.get(x, y) >= threshold))
}

/// Connected components of the graph linking detections whose geographic
/// boxes overlap with `iou >= dedup_iou`. Groups come out ordered by their
/// first member; members keep input order.
pub fn group_overlaps(dets: &[Detection], cfg: &PipelineConfig) -> Result<Vec<DetectionGroup>> {
    let boxes: Vec<GeoBBox> = dets.iter().map(|d| d.geo().copied()).collect::<Result<_>>()?;
    let mut uf = UnionFind::new(dets.len());
    if cfg.dedup_iou <= 0.0 {
        // every pair qualifies
        for i in 1..dets.len() {
            uf.union(0, i);
        }
    } else {
        // sweep along longitude; boxes that do not overlap in x have IoU 0
        let mut order: Vec<usize> = (0..dets.len()).collect();
        order.sort_by(|&a, &b| boxes[a].lon_min.total_cmp(&boxes[b].lon_min));
        for (k, &i) in order.iter().enumerate() {
            for &j in &order[k + 1..] {
                if boxes[j].lon_min >= boxes[i].lon_max {
                    break;
                }
                if boxes[i].iou(&boxes[j]) >= cfg.dedup_iou {
                    uf.union(i, j);
                }
            }
        }
    }
    Ok(uf
        .components()
        .into_iter()
        .map(|idx| {
            let members: Vec<Detection> = idx.iter().map(|&i| dets[i].clone()).collect();
            let representative = select_representative(&members);
            DetectionGroup {
                members,
                representative,
            }
        })
        .collect())
}

/// Index of the most reliable member: the highest-confidence member of the
/// strict-majority class if there is one, else the highest-confidence member
/// overall. Ties go to the smaller id.
pub fn select_representative(members: &[Detection]) -> usize {
    let mut counts: HashMap<ObjectClass, usize> = HashMap::new();
    for m in members {
        *counts.entry(m.class).or_default() += 1;
    }
    let majority = counts
        .iter()
        .find(|(_, &n)| 2 * n > members.len())
        .map(|(&c, _)| c);
    members
        .iter()
        .enumerate()
        .filter(|(_, m)| majority.is_none_or(|c| m.class == c))
        .max_by(|(_, a), (_, b)| {
            a.confidence
                .total_cmp(&b.confidence)
                .then_with(|| b.id.cmp(&a.id))
        })
        .map(|(i, _)| i)
        .unwrap_or(0)
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureCollection {
    #[serde(rename = "type")]
    kind: String,
    features: Vec<Feature>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Feature {
    #[serde(rename = "type")]
    kind: String,
    geometry: Polygon,
    properties: FeatureProps,
}

#[derive(Debug, Serialize, Deserialize)]
struct Polygon {
    #[serde(rename = "type")]
    kind: String,
    coordinates: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FeatureProps {
    id: u64,
    class_id: ObjectClass,
    class_name: String,
    confidence: f64,
    chip_id: String,
    bbox_px: PixelBBox,
}

/// RFC 7946 FeatureCollection of counter-clockwise box polygons.
pub fn export_geojson(dets: &[Detection]) -> Result<String> {
    let features = dets
        .iter()
        .map(|d| {
            let g = d.geo()?;
            let ring = vec![
                [g.lon_min, g.lat_min],
                [g.lon_max, g.lat_min],
                [g.lon_max, g.lat_max],
                [g.lon_min, g.lat_max],
                [g.lon_min, g.lat_min],
            ];
            Ok(Feature {
                kind: "Feature".into(),
                geometry: Polygon {
                    kind: "Polygon".into(),
                    coordinates: vec![ring],
                },
                properties: FeatureProps {
                    id: d.id,
                    class_id: d.class,
                    class_name: d.class.name().into(),
                    confidence: d.confidence,
                    chip_id: d.chip_id.clone(),
                    bbox_px: d.box_px,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fc = FeatureCollection {
        kind: "FeatureCollection".into(),
        features,
    };
    let mut text = serde_json::to_string_pretty(&fc)?;
    text.push('\n');
    Ok(text)
}

/// Read back a collection written by [`export_geojson`]; the box is the
/// hull of each polygon's outer ring.
pub fn parse_geojson(text: &str) -> Result<Vec<Detection>> {
    let fc: FeatureCollection = serde_json::from_str(text)?;
    if fc.kind != "FeatureCollection" {
        return Err(Error::Parse(format!("expected FeatureCollection, got {}", fc.kind)));
    }
    fc.features
        .into_iter()
        .map(|f| {
            let ring = f
                .geometry
                .coordinates
                .first()
                .filter(|r| !r.is_empty())
                .ok_or_else(|| Error::Parse(format!("feature {} has no ring", f.properties.id)))?;
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in ring {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let p = f.properties;
            Ok(Detection {
                id: p.id,
                chip_id: p.chip_id,
                class: p.class_id,
                confidence: p.confidence,
                box_px: p.bbox_px,
                box_geo: Some(GeoBBox::new(lo[0], lo[1], hi[0], hi[1])?),
            })
        })
        .collect()
}

/// Full stage: ids → confidence filter → dark filter → geolocation →
/// grouping → one representative per group, sorted by id.
///
/// Ids follow the `(chip_id, box, class, confidence)` order of the input so
/// the result does not depend on input order.
pub fn postprocess_run(
    raw: &[RawDetection],
    chips: &ChipStore,
    cfg: &PipelineConfig,
) -> Result<Vec<Detection>> {
    cfg.validate()?;
    let mut sorted: Vec<&RawDetection> = raw.iter().collect();
    sorted.sort_by(|a, b| {
        a.chip_id
            .cmp(&b.chip_id)
            .then_with(|| {
                a.bbox_px
                    .as_array()
                    .iter()
                    .zip(b.bbox_px.as_array())
                    .map(|(x, y)| x.total_cmp(&y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .then_with(|| a.class_id.cmp(&b.class_id))
            .then_with(|| a.conf.total_cmp(&b.conf))
    });
    let dets = sorted
        .iter()
        .enumerate()
        .map(|(i, r)| Detection::from_raw(i as u64, r))
        .collect::<Result<Vec<_>>>()?;

    let dets = filter_confidence(dets, cfg);
    let mut dets = filter_dark(dets, chips, cfg)?;
    for d in &mut dets {
        let gt = chips.get(&d.chip_id)?.geotransform;
        d.box_geo = Some(geolocate(&d.box_px, &gt)?);
    }
    let mut out: Vec<Detection> = group_overlaps(&dets, cfg)?
        .into_iter()
        .map(|g| g.representative().clone())
        .collect();
    out.sort_by_key(|d| d.id);
    Ok(out)
}
