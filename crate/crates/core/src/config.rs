use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every numeric threshold of the pipeline. Missing JSON fields fall back to
/// the defaults, so a config file only needs the values it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Lower end of the backscatter range mapped to 0.
    pub db_lo: f64,
    /// Upper end of the backscatter range mapped to 255.
    pub db_hi: f64,
    pub chip_size: usize,
    pub chip_overlap: f64,
    pub grid_step_m: f64,
    pub grid_tile_m: f64,
    pub conf_threshold: f64,
    /// Detections whose box holds no pixel at or above this value are noise.
    pub dark_pixel_threshold: u8,
    pub dedup_iou: f64,
    pub eval_iou: f64,
    pub coast_buffer_m: f64,
    pub pixel_size_m: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            db_lo: -40.0,
            db_hi: 0.0,
            chip_size: 640,
            chip_overlap: 0.2,
            grid_step_m: 100_000.0,
            grid_tile_m: 110_000.0,
            conf_threshold: 0.5,
            dark_pixel_threshold: 150,
            dedup_iou: 0.2,
            eval_iou: 0.3,
            coast_buffer_m: 1_000.0,
            pixel_size_m: 10.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.db_lo.is_finite() && self.db_hi.is_finite() && self.db_lo < self.db_hi) {
            return fail("db_lo must be below db_hi");
        }
        if self.chip_size == 0 {
            return fail("chip_size must be positive");
        }
        if !(0.0..1.0).contains(&self.chip_overlap) {
            return fail("chip_overlap must lie in [0, 1)");
        }
        if self.chip_stride() == 0 {
            return fail("chip_overlap leaves a zero stride");
        }
        if !(self.grid_step_m > 0.0 && self.grid_tile_m >= self.grid_step_m) {
            return fail("grid_tile_m must be >= grid_step_m > 0");
        }
        for (name, v) in [
            ("conf_threshold", self.conf_threshold),
            ("dedup_iou", self.dedup_iou),
            ("eval_iou", self.eval_iou),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.coast_buffer_m >= 0.0 && self.pixel_size_m > 0.0) {
            return fail("coast_buffer_m must be >= 0 and pixel_size_m > 0");
        }
        Ok(())
    }

    /// Distance between consecutive chip anchors.
    pub fn chip_stride(&self) -> usize {
        (self.chip_size as f64 * (1.0 - self.chip_overlap)).round() as usize
    }

    pub fn coast_buffer_px(&self) -> f64 {
        self.coast_buffer_m / self.pixel_size_m
    }
}
