//! dB stacks to detector-ready chips: temporal median, 8-bit quantization,
//! planar grid tiling and overlapping chip extraction.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::geometry::{GeoTransform, CRS};
use crate::io;
use crate::raster::{Raster8, RasterF};

/// Per-pixel median over a co-registered stack, skipping nodata. Even counts
/// take the mean of the two middle values. Pixels without any valid sample
/// become nodata (the first raster's sentinel, or NaN).
pub fn median_composite(stack: &[RasterF]) -> Result<RasterF> {
    let first = stack.first().ok_or(Error::EmptyStack)?;
    let (w, h) = first.dims();
    if let Some(bad) = stack.iter().find(|r| r.dims() != (w, h)) {
        return Err(Error::ShapeMismatch {
            expected: (w, h),
            actual: bad.dims(),
        });
    }
    let fill = first.nodata().unwrap_or(f32::NAN);
    let mut out = vec![0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(row, line)| {
        let mut samples = Vec::with_capacity(stack.len());
        for (col, px) in line.iter_mut().enumerate() {
            samples.clear();
            samples.extend(
                stack
                    .iter()
                    .map(|r| r.get(col, row))
                    .zip(stack)
                    .filter(|(v, r)| !r.is_nodata(*v))
                    .map(|(v, _)| v),
            );
            *px = median(&mut samples).unwrap_or(fill);
        }
    });
    RasterF::new(w, h, out, first.nodata())
}

fn median(samples: &mut [f32]) -> Option<f32> {
    let n = samples.len();
    if n == 0 {
        return None;
    }
    samples.sort_unstable_by(f32::total_cmp);
    if n % 2 == 1 {
        Some(samples[n / 2])
    } else {
        let (lo, hi) = (samples[n / 2 - 1] as f64, samples[n / 2] as f64);
        Some(((lo + hi) / 2.0) as f32)
    }
}

/// Map a dB value onto 0..=255 by clipping to `[db_lo, db_hi]`,
/// rounding half up.
pub fn quantize_value(db: f64, cfg: &PipelineConfig) -> u8 {
    if db.is_nan() {
        return 0;
    }
    let t = ((db - cfg.db_lo) / (cfg.db_hi - cfg.db_lo)).clamp(0.0, 1.0);
    (t * 255.0 + 0.5).floor().min(255.0) as u8
}

/// dB value at the centre of an 8-bit level (inverse of the linear map).
pub fn dequantize_value(v: u8, cfg: &PipelineConfig) -> f64 {
    cfg.db_lo + v as f64 / 255.0 * (cfg.db_hi - cfg.db_lo)
}

pub fn quantize_db(r: &RasterF, cfg: &PipelineConfig) -> Result<Raster8> {
    cfg.validate()?;
    let values = r
        .values()
        .par_iter()
        .map(|&v| {
            if r.is_nodata(v) {
                0
            } else {
                quantize_value(v as f64, cfg)
            }
        })
        .collect();
    Raster8::new(r.width(), r.height(), values)
}

/// One cell of the processing grid, in the caller's planar frame (metres).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileSpec {
    pub tile_id: String,
    /// `[x0, y0, x1, y1]`, y growing north.
    pub bounds_m: [f64; 4],
    /// Pixel → planar mapping, north-up, `pixel_size_m` per pixel, origin at
    /// the tile's north-west corner.
    pub geotransform: GeoTransform,
}

impl TileSpec {
    pub fn size_px(&self, cfg: &PipelineConfig) -> usize {
        (cfg.grid_tile_m / cfg.pixel_size_m).round() as usize
    }
}

/// Tiles of `grid_tile_m` side whose origins step by `grid_step_m` from the
/// ROI's lower-left corner until they pass the ROI's far edges.
pub fn make_grid(roi_m: [f64; 4], cfg: &PipelineConfig) -> Result<Vec<TileSpec>> {
    cfg.validate()?;
    let [x0, y0, x1, y1] = roi_m;
    if !roi_m.iter().all(|v| v.is_finite()) || x1 <= x0 || y1 <= y0 {
        return Err(Error::InvalidRoi(format!(
            "non-positive extent ({x0}, {y0}, {x1}, {y1})"
        )));
    }
    let steps = |lo: f64, hi: f64| {
        let mut n = 0usize;
        while lo + n as f64 * cfg.grid_step_m < hi {
            n += 1;
        }
        n
    };
    let (nx, ny) = (steps(x0, x1), steps(y0, y1));
    let mut tiles = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let ox = x0 + i as f64 * cfg.grid_step_m;
            let oy = y0 + j as f64 * cfg.grid_step_m;
            let top = oy + cfg.grid_tile_m;
            tiles.push(TileSpec {
                tile_id: format!("x{i:03}y{j:03}"),
                bounds_m: [ox, oy, ox + cfg.grid_tile_m, top],
                geotransform: GeoTransform::new(
                    ox,
                    cfg.pixel_size_m,
                    0.0,
                    top,
                    0.0,
                    -cfg.pixel_size_m,
                )?,
            });
        }
    }
    Ok(tiles)
}

/// A chip cut from a tile raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Chip {
    pub chip_id: String,
    pub tile_id: String,
    pub raster: Raster8,
    pub offset_px: (usize, usize),
    pub geotransform: GeoTransform,
}

impl Chip {
    pub fn sidecar(&self) -> ChipSidecar {
        ChipSidecar {
            chip_id: self.chip_id.clone(),
            tile_id: self.tile_id.clone(),
            offset_px: [self.offset_px.0, self.offset_px.1],
            geotransform: self.geotransform,
            crs: CRS.to_string(),
        }
    }
}

/// `{chip_id}.json` next to every chip PGM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipSidecar {
    pub chip_id: String,
    pub tile_id: String,
    pub offset_px: [usize; 2],
    pub geotransform: GeoTransform,
    pub crs: String,
}

/// Anchors `0, stride, 2*stride, ...` plus a final anchor at
/// `dim - chip` when the regular ones stop short of the edge.
pub fn chip_anchors(dim: usize, chip: usize, stride: usize) -> Vec<usize> {
    if dim < chip || stride == 0 {
        return Vec::new();
    }
    let last = dim - chip;
    let mut anchors: Vec<usize> = (0..=last).step_by(stride).collect();
    if anchors.last() != Some(&last) {
        anchors.push(last);
    }
    anchors
}

pub fn chip_tile(
    raster: &Raster8,
    gt: &GeoTransform,
    tile_id: &str,
    cfg: &PipelineConfig,
) -> Result<Vec<Chip>> {
    cfg.validate()?;
    let size = cfg.chip_size;
    let (w, h) = raster.dims();
    if w < size || h < size {
        return Err(Error::TileTooSmall {
            width: w,
            height: h,
            chip_size: size,
        });
    }
    let stride = cfg.chip_stride();
    let xs = chip_anchors(w, size, stride);
    let ys = chip_anchors(h, size, stride);
    let cells: Vec<(usize, usize)> = (0..ys.len())
        .flat_map(|r| (0..xs.len()).map(move |c| (c, r)))
        .collect();
    cells
        .par_iter()
        .map(|&(col, row)| {
            let (x, y) = (xs[col], ys[row]);
            Ok(Chip {
                chip_id: format!("{tile_id}_{col}_{row}"),
                tile_id: tile_id.to_string(),
                raster: raster.window(x, y, size, size)?,
                offset_px: (x, y),
                geotransform: gt.translated(x as f64, y as f64),
            })
        })
        .collect()
}

/// Write `{chip_id}.pgm` and `{chip_id}.json` for every chip.
pub fn write_chips(dir: &Path, chips: &[Chip]) -> Result<()> {
    for chip in chips {
        io::write_pgm(&dir.join(format!("{}.pgm", chip.chip_id)), &chip.raster)?;
        io::write_json(&dir.join(format!("{}.json", chip.chip_id)), &chip.sidecar())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack_of(values: &[f32]) -> Vec<RasterF> {
        values
            .iter()
            .map(|&v| RasterF::filled(1, 1, v).unwrap())
            .collect()
    }

    #[test]
    fn median_odd_and_even() {
        let m = median_composite(&stack_of(&[3.0, 7.0, 200.0])).unwrap();
        assert_eq!(m.get(0, 0), 7.0);
        let m = median_composite(&stack_of(&[10.0, 20.0, 30.0, 40.0])).unwrap();
        assert_eq!(m.get(0, 0), 25.0);
    }

    #[test]
    fn median_removes_transient_bright_frames() {
        let m = median_composite(&stack_of(&[-5.0, -25.0, -5.0, -25.0, -25.0, -5.0, -25.0]))
            .unwrap();
        assert_eq!(m.get(0, 0), -25.0);
    }

    #[test]
    fn median_skips_nodata() {
        let a = RasterF::new(2, 1, vec![-9999.0, -10.0], Some(-9999.0)).unwrap();
        let b = RasterF::new(2, 1, vec![-9999.0, -20.0], Some(-9999.0)).unwrap();
        let c = RasterF::new(2, 1, vec![-9999.0, f32::NAN], Some(-9999.0)).unwrap();
        let m = median_composite(&[a, b, c]).unwrap();
        assert_eq!(m.get(0, 0), -9999.0);
        assert!(m.is_nodata(m.get(0, 0)));
        assert_eq!(m.get(1, 0), -15.0);
    }

    #[test]
    fn median_errors() {
        assert_eq!(median_composite(&[]).unwrap_err().to_string(), "empty stack");
        let a = RasterF::filled(2, 2, 0.0).unwrap();
        let b = RasterF::filled(3, 2, 0.0).unwrap();
        let err = median_composite(&[a, b]).unwrap_err();
        assert!(err.to_string().starts_with("shape mismatch"));
    }

    #[test]
    fn quantize_anchors() {
        let cfg = PipelineConfig::default();
        assert_eq!(quantize_value(-40.0, &cfg), 0);
        assert_eq!(quantize_value(0.0, &cfg), 255);
        assert_eq!(quantize_value(-16.47, &cfg), 150);
        assert_eq!(quantize_value(-60.0, &cfg), 0);
        assert_eq!(quantize_value(12.0, &cfg), 255);
        assert_eq!(quantize_value(f64::NAN, &cfg), 0);
    }

    #[test]
    fn quantize_raster_maps_nodata_to_zero() {
        let cfg = PipelineConfig::default();
        let r = RasterF::new(3, 1, vec![-9999.0, -20.0, f32::NAN], Some(-9999.0)).unwrap();
        let q = quantize_db(&r, &cfg).unwrap();
        // -20 dB is exactly half way: 127.5 rounds up
        assert_eq!(q.values(), &[0, 128, 0]);
    }

    #[test]
    fn quantize_is_monotone_and_surjective() {
        let cfg = PipelineConfig::default();
        let mut prev = 0u8;
        let mut seen = [false; 256];
        for i in 0..=40_000 {
            let db = -40.0 + i as f64 * 0.001;
            let v = quantize_value(db, &cfg);
            assert!(v >= prev);
            prev = v;
            seen[v as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn grid_examples() {
        let cfg = PipelineConfig::default();
        let one = make_grid([0.0, 0.0, 100_000.0, 100_000.0], &cfg).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].bounds_m, [0.0, 0.0, 110_000.0, 110_000.0]);

        let two = make_grid([0.0, 0.0, 200_000.0, 100_000.0], &cfg).unwrap();
        assert_eq!(two.len(), 2);
        let overlap = two[0].bounds_m[2] - two[1].bounds_m[0];
        assert_eq!(overlap, 10_000.0);

        assert_eq!(make_grid([5.0, 5.0, 6.0, 6.0], &cfg).unwrap().len(), 1);
        assert!(make_grid([0.0, 0.0, 0.0, 10.0], &cfg).is_err());
    }

    #[test]
    fn grid_tile_geotransform() {
        let cfg = PipelineConfig::default();
        let t = &make_grid([1000.0, 2000.0, 50_000.0, 50_000.0], &cfg).unwrap()[0];
        assert_eq!(t.size_px(&cfg), 11_000);
        assert_eq!(t.geotransform.apply(0.0, 0.0), (1000.0, 112_000.0));
        assert_eq!(t.geotransform.apply(11_000.0, 11_000.0), (111_000.0, 2000.0));
    }

    #[test]
    fn chip_anchor_examples() {
        assert_eq!(chip_anchors(640, 640, 512), vec![0]);
        assert_eq!(chip_anchors(1664, 640, 512), vec![0, 512, 1024]);
        assert_eq!(chip_anchors(1000, 640, 512), vec![0, 360]);
        assert!(chip_anchors(639, 640, 512).is_empty());
    }

    #[test]
    fn chip_tile_ids_and_offsets() {
        let cfg = PipelineConfig::default();
        let r = Raster8::filled(1000, 640, 7).unwrap();
        let gt = GeoTransform::north_up(10.0, 54.0, 1.0 / 1024.0).unwrap();
        let chips = chip_tile(&r, &gt, "t", &cfg).unwrap();
        let ids: Vec<_> = chips.iter().map(|c| c.chip_id.as_str()).collect();
        assert_eq!(ids, ["t_0_0", "t_1_0"]);
        assert_eq!(chips[1].offset_px, (360, 0));
        assert_eq!(chips[1].raster.dims(), (640, 640));
        assert_eq!(chips[1].geotransform.apply(0.0, 0.0), gt.apply(360.0, 0.0));
    }

    #[test]
    fn chip_tile_too_small() {
        let cfg = PipelineConfig::default();
        let r = Raster8::filled(600, 800, 0).unwrap();
        let gt = GeoTransform::north_up(0.0, 0.0, 1e-4).unwrap();
        let err = chip_tile(&r, &gt, "t", &cfg).unwrap_err();
        assert!(err.to_string().starts_with("tile too small"));
    }
}
