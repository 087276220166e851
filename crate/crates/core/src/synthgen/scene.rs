use crate::class::ObjectClass;
use crate::error::{Error, Result};
use crate::geometry::PixelBBox;
use crate::label::Label;
use crate::raster::Raster8;

use super::cluster::ClusterGeometry;
use super::entity::EntityMap;
use super::kernel::{render_kernel, KernelSpec};

/// A screened background image with its entity segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub image: Raster8,
    pub entity_map: EntityMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthObject {
    pub class: ObjectClass,
    pub geometry: ClusterGeometry,
    /// Scene pixel holding the geometry origin.
    pub anchor: (usize, usize),
    pub rotation_deg: f64,
    /// One kernel per geometry point.
    pub kernels: Vec<KernelSpec>,
}

/// One stamped pixel: scene position and the quantized stamp value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StampPixel {
    pub x: usize,
    pub y: usize,
    pub value: u8,
}

impl SynthObject {
    /// Scene pixel of every rotated, translated geometry point. The origin
    /// sits at the centre of the anchor pixel.
    pub fn point_pixels(&self) -> Vec<(i64, i64)> {
        let (sin, cos) = self.rotation_deg.to_radians().sin_cos();
        let (ax, ay) = (self.anchor.0 as f64 + 0.5, self.anchor.1 as f64 + 0.5);
        self.geometry
            .points
            .iter()
            .map(|p| {
                let x = ax + p.x * cos - p.y * sin;
                let y = ay + p.x * sin + p.y * cos;
                (x.floor() as i64, y.floor() as i64)
            })
            .collect()
    }

    /// Every pixel the kernels write, before blending. Fails when any stamp
    /// leaves a `width x height` scene.
    pub fn footprint(&self, width: usize, height: usize) -> Result<Vec<StampPixel>> {
        if self.kernels.len() != self.geometry.points.len() {
            return Err(Error::InvalidKernel(format!(
                "{} kernels for {} points",
                self.kernels.len(),
                self.geometry.points.len()
            )));
        }
        let mut out = Vec::new();
        for ((px, py), kernel) in self.point_pixels().into_iter().zip(&self.kernels) {
            let stamp = render_kernel(kernel)?;
            let (hx, hy) = (((stamp.width - 1) / 2) as i64, ((stamp.height - 1) / 2) as i64);
            let (x0, y0) = (px - hx, py - hy);
            if x0 < 0
                || y0 < 0
                || x0 + stamp.width as i64 > width as i64
                || y0 + stamp.height as i64 > height as i64
            {
                return Err(Error::PlacementRejected(format!(
                    "stamp at ({px}, {py}) leaves the scene"
                )));
            }
            for sy in 0..stamp.height {
                for sx in 0..stamp.width {
                    let v = stamp.get(sx, sy).round().clamp(0.0, 255.0) as u8;
                    out.push(StampPixel {
                        x: x0 as usize + sx,
                        y: y0 as usize + sy,
                        value: v,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Hull of the point positions dilated by each kernel's half-diagonal,
    /// clipped to the scene.
    pub fn label_box(&self, width: usize, height: usize) -> Result<PixelBBox> {
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for ((px, py), kernel) in self.point_pixels().into_iter().zip(&self.kernels) {
            let (cx, cy) = (px as f64 + 0.5, py as f64 + 0.5);
            let r = kernel.half_diagonal();
            b[0] = b[0].min(cx - r);
            b[1] = b[1].min(cy - r);
            b[2] = b[2].max(cx + r);
            b[3] = b[3].max(cy + r);
        }
        PixelBBox::new(
            b[0].max(0.0),
            b[1].max(0.0),
            b[2].min(width as f64),
            b[3].min(height as f64),
        )
    }
}

/// Background plus placed objects and their labels (same order).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub image: Raster8,
    pub entity_map: EntityMap,
    pub objects: Vec<SynthObject>,
    pub labels: Vec<Label>,
    /// Index of the source background, when generated from a pool.
    pub background_index: usize,
}

impl SynthScene {
    pub fn new(background: &Background, background_index: usize) -> Self {
        Self {
            image: background.image.clone(),
            entity_map: background.entity_map.clone(),
            objects: Vec::new(),
            labels: Vec::new(),
            background_index,
        }
    }

    pub fn label_boxes(&self) -> Result<Vec<PixelBBox>> {
        let (w, h) = self.image.dims();
        self.labels.iter().map(|l| l.to_pixel_box(w, h)).collect()
    }
}

/// Rotate `geometry` about its origin, move it to `anchor`, max-blend one
/// kernel stamp per point into the scene and append the derived label.
/// Nothing is modified when the placement is rejected.
pub fn place_object(
    scene: &mut SynthScene,
    class: ObjectClass,
    geometry: &ClusterGeometry,
    anchor: (usize, usize),
    rotation_deg: f64,
    kernels: &[KernelSpec],
) -> Result<()> {
    let (w, h) = scene.image.dims();
    if !scene.entity_map.is_sea(anchor.0, anchor.1) {
        return Err(Error::PlacementRejected(format!(
            "anchor {anchor:?} is not on sea"
        )));
    }
    let object = SynthObject {
        class,
        geometry: geometry.clone(),
        anchor,
        rotation_deg: rotation_deg.rem_euclid(360.0),
        kernels: kernels.to_vec(),
    };
    for (px, py) in object.point_pixels() {
        if px < 0 || py < 0 || !scene.entity_map.is_sea(px as usize, py as usize) {
            return Err(Error::PlacementRejected(format!(
                "geometry point ({px}, {py}) is not on sea"
            )));
        }
    }
    let footprint = object.footprint(w, h)?;
    let label = Label::from_pixel_box(class, &object.label_box(w, h)?, w, h)?;
    for p in footprint {
        if p.value > scene.image.get(p.x, p.y) {
            scene.image.set(p.x, p.y, p.value);
        }
    }
    scene.objects.push(object);
    scene.labels.push(label);
    Ok(())
}
