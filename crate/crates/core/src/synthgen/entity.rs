use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::raster::Raster8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entity {
    Land,
    Coast,
    Sea,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMap {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<Entity>,
}

impl EntityMap {
    pub fn all(width: usize, height: usize, e: Entity) -> Self {
        Self {
            width,
            height,
            classes: vec![e; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Entity {
        self.classes[y * self.width + x]
    }

    pub fn is_sea(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.get(x, y) == Entity::Sea
    }

    pub fn count(&self, e: Entity) -> usize {
        self.classes.iter().filter(|&&c| c == e).count()
    }
}

/// Land where the mask is non-zero; coast is every other pixel within the
/// coast buffer (Euclidean, in pixels) of land; sea elsewhere.
pub fn build_entity_map(land_mask: &Raster8, cfg: &PipelineConfig) -> EntityMap {
    let (w, h) = land_mask.dims();
    let land: Vec<bool> = land_mask.values().iter().map(|&v| v != 0).collect();
    let d2 = squared_distance_to(&land, w, h);
    let r = cfg.coast_buffer_px();
    let r2 = r * r;
    let classes = land
        .iter()
        .zip(&d2)
        .map(|(&is_land, &d)| {
            if is_land {
                Entity::Land
            } else if d <= r2 {
                Entity::Coast
            } else {
                Entity::Sea
            }
        })
        .collect();
    EntityMap {
        width: w,
        height: h,
        classes,
    }
}

const FAR: f64 = 1e20;

/// Exact squared Euclidean distance transform (separable lower-envelope
/// method): distance from every pixel to the nearest `true` pixel.
fn squared_distance_to(target: &[bool], w: usize, h: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = target.iter().map(|&t| if t { 0.0 } else { FAR }).collect();
    let mut buf_in = vec![0.0; w.max(h)];
    let mut buf_out = vec![0.0; w.max(h)];
    let mut scratch = Scratch::new(w.max(h));
    for x in 0..w {
        for y in 0..h {
            buf_in[y] = grid[y * w + x];
        }
        edt_1d(&buf_in[..h], &mut buf_out[..h], &mut scratch);
        for y in 0..h {
            grid[y * w + x] = buf_out[y];
        }
    }
    for y in 0..h {
        buf_in[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&buf_in[..w], &mut buf_out[..w], &mut scratch);
        grid[y * w..(y + 1) * w].copy_from_slice(&buf_out[..w]);
    }
    grid
}

struct Scratch {
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            v: vec![0; n],
            z: vec![0.0; n + 1],
        }
    }
}

fn edt_1d(f: &[f64], d: &mut [f64], s: &mut Scratch) {
    let n = f.len();
    if f.iter().all(|&v| v >= FAR) {
        d.fill(FAR);
        return;
    }
    let mut k = 0usize;
    // start the envelope at the first finite sample
    let first = f.iter().position(|&v| v < FAR).unwrap_or(0);
    s.v[0] = first;
    s.z[0] = f64::NEG_INFINITY;
    s.z[1] = f64::INFINITY;
    for q in first + 1..n {
        if f[q] >= FAR {
            continue;
        }
        let qf = q as f64;
        loop {
            let p = s.v[k] as f64;
            let inter = ((f[q] + qf * qf) - (f[s.v[k]] + p * p)) / (2.0 * qf - 2.0 * p);
            // z[0] is -inf, so k never drops below zero
            if inter <= s.z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            s.v[k] = q;
            s.z[k] = inter;
            s.z[k + 1] = f64::INFINITY;
            break;
        }
    }
    let mut k = 0usize;
    for (q, out) in d.iter_mut().enumerate() {
        let qf = q as f64;
        while s.z[k + 1] < qf {
            k += 1;
        }
        let p = s.v[k];
        let dp = qf - p as f64;
        *out = dp * dp + f[p];
    }
}

/// Accept a candidate background only if no sea pixel reaches
/// `reject_threshold` (bright targets already present).
pub fn screen_background(scene: &Raster8, em: &EntityMap, reject_threshold: u8) -> Result<bool> {
    if scene.dims() != (em.width, em.height) {
        return Err(Error::ShapeMismatch {
            expected: (em.width, em.height),
            actual: scene.dims(),
        });
    }
    Ok(scene
        .values()
        .iter()
        .zip(&em.classes)
        .all(|(&v, &e)| e != Entity::Sea || v < reject_threshold))
}
