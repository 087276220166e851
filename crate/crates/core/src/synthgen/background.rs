use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::raster::Raster8;

use super::derive_rng;
use super::entity::build_entity_map;
use super::scene::Background;

/// Knobs for [`procedural_background`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundParams {
    /// Range of the per-scene mean sea intensity.
    pub sea_mean: (f64, f64),
    /// Speckle standard deviation relative to the sea mean.
    pub speckle: f64,
    /// Sea pixels are clipped to this value (calm, target-free water).
    pub sea_max: u8,
    /// Probability that a scene contains a coastline.
    pub land_probability: f64,
    pub land_mean: (f64, f64),
}

impl Default for BackgroundParams {
    fn default() -> Self {
        Self {
            sea_mean: (25.0, 60.0),
            speckle: 0.3,
            sea_max: 100,
            land_probability: 0.3,
            land_mean: (90.0, 170.0),
        }
    }
}

/// Stand-in for a screened real scene: speckled dark sea, optionally with a
/// wavy land strip along one edge. Deterministic in `seed`.
pub fn procedural_background(
    width: usize,
    height: usize,
    params: &BackgroundParams,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<Background> {
    let mut rng = derive_rng(seed, &[0xb6]);
    let sea_mean = rng.random_range(params.sea_mean.0..=params.sea_mean.1);
    let sea = Normal::new(sea_mean, sea_mean * params.speckle)
        .map_err(|e| Error::InvalidConfig(format!("sea speckle: {e}")))?;
    let land_mean = rng.random_range(params.land_mean.0..=params.land_mean.1);
    let land = Normal::new(land_mean, 30.0)
        .map_err(|e| Error::InvalidConfig(format!("land texture: {e}")))?;

    let mut mask = Raster8::filled(width, height, 0)?;
    if rng.random_bool(params.land_probability.clamp(0.0, 1.0)) {
        let edge = rng.random_range(0..4u8);
        let span = if edge < 2 { height } else { width } as f64;
        let depth = rng.random_range(0.08..0.25) * span;
        let amp = rng.random_range(0.02..0.08) * span;
        let freq = rng.random_range(1.0..4.0) * std::f64::consts::TAU / span.max(1.0);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        for y in 0..height {
            for x in 0..width {
                // distance from the chosen edge, and position along it
                let (inward, along) = match edge {
                    0 => (y as f64, x as f64),
                    1 => ((height - 1 - y) as f64, x as f64),
                    2 => (x as f64, y as f64),
                    _ => ((width - 1 - x) as f64, y as f64),
                };
                if inward < depth + amp * (freq * along + phase).sin() {
                    mask.set(x, y, 1);
                }
            }
        }
    }

    let values = mask
        .values()
        .iter()
        .map(|&m| {
            if m != 0 {
                land.sample(&mut rng).round().clamp(0.0, 255.0) as u8
            } else {
                sea.sample(&mut rng)
                    .round()
                    .clamp(0.0, params.sea_max as f64) as u8
            }
        })
        .collect();
    Ok(Background {
        image: Raster8::new(width, height, values)?,
        entity_map: build_entity_map(&mask, cfg),
    })
}
