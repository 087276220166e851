use rand::Rng;
use rand_distr::StandardNormal;

use crate::class::ObjectClass;
use crate::detection::RawDetection;
use crate::error::{Error, Result};
use crate::geometry::{rect_iou, to_pixel_box, GeoTransform, PixelBBox};
use crate::postprocess::has_bright_pixel;
use crate::raster::Raster8;
use crate::synthgen::derive_rng;

use super::ground_truth::{Frame, GroundTruthSet};

/// Noise model of the oracle detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    /// Standard deviation of the per-corner box noise, in pixels.
    pub jitter_sigma_px: f64,
    /// Probability that a label yields no detection.
    pub dropout: f64,
    /// Spurious boxes to add, as a fraction of the label count.
    pub spurious: f64,
    /// Spurious boxes only cover pixels below this value.
    pub dark_threshold: u8,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            jitter_sigma_px: 2.0,
            dropout: 0.05,
            spurious: 0.05,
            dark_threshold: 150,
        }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.jitter_sigma_px.is_finite() && self.jitter_sigma_px >= 0.0) {
            return Err(Error::InvalidConfig("jitter must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.dropout) || !(0.0..=1.0).contains(&self.spurious) {
            return Err(Error::InvalidConfig("dropout and spurious rates must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A chip as the oracle sees it: its pixels and its reference labels.
#[derive(Debug, Clone, Copy)]
pub struct OracleChip<'a> {
    pub chip_id: &'a str,
    pub raster: &'a Raster8,
    pub labels: &'a [(ObjectClass, PixelBBox)],
}

const SPURIOUS_SIZE: (u32, u32) = (6, 20);
const SPURIOUS_TRIES: usize = 64;

/// Stand-in detector: each label survives with probability `1 - dropout` as a
/// detection with Gaussian corner noise and confidence in [0.6, 1]; then
/// `round(spurious * labels)` boxes are dropped on dark pixels away from every
/// label, with confidence in [0.5, 0.8]. Each chip draws from its own stream
/// so the output only depends on the seed and the chip list.
pub fn oracle_detector(
    chips: &[OracleChip<'_>],
    params: &OracleParams,
    seed: u64,
) -> Result<Vec<RawDetection>> {
    params.validate()?;
    let mut out = Vec::new();
    for (ci, chip) in chips.iter().enumerate() {
        let mut rng = derive_rng(seed, &[0, ci as u64]);
        let (w, h) = (chip.raster.width() as f64, chip.raster.height() as f64);
        for &(class, b) in chip.labels {
            let keep = !rng.random_bool(params.dropout);
            let noise: [f64; 4] =
                std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal) * params.jitter_sigma_px);
            let conf = rng.random_range(0.6..=1.0);
            if !keep {
                continue;
            }
            if let Some(bbox) = jitter_box(&b, noise, w, h) {
                out.push(RawDetection {
                    chip_id: chip.chip_id.to_string(),
                    class_id: class,
                    conf,
                    bbox_px: bbox,
                });
            }
        }
    }

    let total_labels: usize = chips.iter().map(|c| c.labels.len()).sum();
    let n_spurious = (params.spurious * total_labels as f64).round() as usize;
    if n_spurious > 0 && !chips.is_empty() {
        let mut rng = derive_rng(seed, &[1]);
        for _ in 0..n_spurious {
            let chip = &chips[rng.random_range(0..chips.len())];
            if let Some(bbox) = dark_box(chip, params.dark_threshold, &mut rng) {
                let class = ObjectClass::ALL[rng.random_range(0..3)];
                out.push(RawDetection {
                    chip_id: chip.chip_id.to_string(),
                    class_id: class,
                    conf: rng.random_range(0.5..=0.8),
                    bbox_px: bbox,
                });
            }
        }
    }
    Ok(out)
}

fn jitter_box(b: &PixelBBox, noise: [f64; 4], w: f64, h: f64) -> Option<PixelBBox> {
    let (mut x0, mut x1) = (b.x0 + noise[0], b.x1 + noise[2]);
    let (mut y0, mut y1) = (b.y0 + noise[1], b.y1 + noise[3]);
    if x1 - x0 < 1.0 {
        let c = (x0 + x1) / 2.0;
        (x0, x1) = (c - 0.5, c + 0.5);
    }
    if y1 - y0 < 1.0 {
        let c = (y0 + y1) / 2.0;
        (y0, y1) = (c - 0.5, c + 0.5);
    }
    PixelBBox::new(x0, y0, x1, y1).ok()?.clip(w, h)
}

fn dark_box<R: Rng + ?Sized>(chip: &OracleChip<'_>, threshold: u8, rng: &mut R) -> Option<PixelBBox> {
    let (w, h) = (chip.raster.width(), chip.raster.height());
    for _ in 0..SPURIOUS_TRIES {
        let bw = rng.random_range(SPURIOUS_SIZE.0..=SPURIOUS_SIZE.1) as usize;
        let bh = rng.random_range(SPURIOUS_SIZE.0..=SPURIOUS_SIZE.1) as usize;
        if bw > w || bh > h {
            return None;
        }
        let x = rng.random_range(0..=w - bw) as f64;
        let y = rng.random_range(0..=h - bh) as f64;
        let b = PixelBBox::new(x, y, x + bw as f64, y + bh as f64).ok()?;
        let clear = chip
            .labels
            .iter()
            .all(|(_, l)| rect_iou(l.as_array(), b.as_array()) == 0.0);
        if clear && !has_bright_pixel(chip.raster, &b, threshold) {
            return Some(b);
        }
    }
    None
}

/// GT objects that belong to a chip, in chip pixels. Geographic entries are
/// projected through the chip geotransform and kept when at least half of
/// their area falls inside the chip; pixel entries are kept when they name
/// this chip.
pub fn labels_for_chip(
    gts: &GroundTruthSet,
    chip_id: &str,
    gt: &GeoTransform,
    width: usize,
    height: usize,
) -> Result<Vec<(ObjectClass, PixelBBox)>> {
    let mut out = Vec::new();
    for e in &gts.entries {
        let full = match e.frame {
            Frame::Geo => {
                let [a, b, c, d] = e.bbox;
                to_pixel_box(&crate::geometry::GeoBBox::new(a, b, c, d)?, gt)?
            }
            Frame::Px => {
                if e.chip_id.as_deref() != Some(chip_id) {
                    continue;
                }
                let [a, b, c, d] = e.bbox;
                PixelBBox::new(a, b, c, d)?
            }
        };
        if let Some(clipped) = full.clip(width as f64, height as f64) {
            if clipped.area() >= 0.5 * full.area() {
                out.push((e.class_id, clipped));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<(ObjectClass, PixelBBox)> {
        vec![
            (ObjectClass::SinglePlatform, PixelBBox::new(10., 10., 30., 30.).unwrap()),
            (ObjectClass::WindTurbine, PixelBBox::new(100., 50., 110., 60.).unwrap()),
        ]
    }

    #[test]
    fn identity_without_noise() {
        let r = Raster8::filled(200, 200, 10).unwrap();
        let l = labels();
        let chips = [OracleChip { chip_id: "a", raster: &r, labels: &l }];
        let p = OracleParams { jitter_sigma_px: 0.0, dropout: 0.0, spurious: 0.0, dark_threshold: 150 };
        let dets = oracle_detector(&chips, &p, 3).unwrap();
        assert_eq!(dets.len(), 2);
        for (d, (c, b)) in dets.iter().zip(&l) {
            assert_eq!((d.class_id, d.bbox_px), (*c, *b));
            assert!((0.6..=1.0).contains(&d.conf));
        }
    }

    #[test]
    fn full_dropout_and_determinism() {
        let r = Raster8::filled(200, 200, 10).unwrap();
        let l = labels();
        let chips = [OracleChip { chip_id: "a", raster: &r, labels: &l }];
        let p = OracleParams { dropout: 1.0, spurious: 0.0, ..OracleParams::default() };
        assert!(oracle_detector(&chips, &p, 3).unwrap().is_empty());
        let p = OracleParams { spurious: 1.0, ..OracleParams::default() };
        let a = oracle_detector(&chips, &p, 9).unwrap();
        assert_eq!(a, oracle_detector(&chips, &p, 9).unwrap());
        assert_ne!(a, oracle_detector(&chips, &p, 10).unwrap());
    }

    #[test]
    fn spurious_boxes_stay_dark() {
        let mut r = Raster8::filled(200, 200, 40).unwrap();
        for y in 0..200 {
            for x in 0..100 {
                r.set(x, y, 200);
            }
        }
        let l = labels();
        let chips = [OracleChip { chip_id: "a", raster: &r, labels: &l }];
        let p = OracleParams { dropout: 1.0, spurious: 1.0, ..OracleParams::default() };
        let dets = oracle_detector(&chips, &p, 1).unwrap();
        assert_eq!(dets.len(), 2);
        for d in dets {
            assert!(!has_bright_pixel(&r, &d.bbox_px, 150));
            assert!((0.5..=0.8).contains(&d.conf));
        }
    }

    #[test]
    fn chip_labels_from_geo_truth() {
        use crate::evaluate::GroundTruth;
        use crate::geometry::geolocate;
        let gt = GeoTransform::north_up(3.0, 55.0, 0.001).unwrap();
        let inside = geolocate(&PixelBBox::new(10., 10., 20., 20.).unwrap(), &gt).unwrap();
        let straddle = geolocate(&PixelBBox::new(95., 10., 115., 20.).unwrap(), &gt).unwrap();
        let set = GroundTruthSet::new(vec![
            GroundTruth::geo(ObjectClass::SinglePlatform, &inside, "r"),
            GroundTruth::geo(ObjectClass::WindTurbine, &straddle, "r"),
        ])
        .unwrap();
        let got = labels_for_chip(&set, "c", &gt, 100, 100).unwrap();
        assert_eq!(got.len(), 1);
        let b = got[0].1;
        assert!((b.x0 - 10.0).abs() < 1e-6 && (b.y1 - 20.0).abs() < 1e-6);
    }
}
