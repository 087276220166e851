//! Box geometry and the affine pixel → lon/lat mapping.
//!
//! Pixel boxes are continuous and half-open: `x0` inclusive, `x1` exclusive,
//! origin at the top-left corner, `y` growing downward. A pixel `(i, j)`
//! covers `[i, i + 1) x [j, j + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coordinate reference system of every geographic box in the pipeline.
pub const CRS: &str = "EPSG:4326";

/// Axis-aligned box in chip-local pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct PixelBBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl PixelBBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let finite = [x0, y0, x1, y1].iter().all(|v| v.is_finite());
        if !finite || x0 >= x1 || y0 >= y1 {
            return Err(Error::InvalidBox(format!(
                "pixel box ({x0}, {y0}, {x1}, {y1})"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.x0, self.y0),
            (self.x1, self.y0),
            (self.x1, self.y1),
            (self.x0, self.y1),
        ]
    }

    /// Clip to `[0, width) x [0, height)`; `None` when nothing is left.
    pub fn clip(&self, width: f64, height: f64) -> Option<PixelBBox> {
        PixelBBox::new(
            self.x0.max(0.0),
            self.y0.max(0.0),
            self.x1.min(width),
            self.y1.min(height),
        )
        .ok()
    }
}

impl TryFrom<[f64; 4]> for PixelBBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        PixelBBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<PixelBBox> for [f64; 4] {
    fn from(b: PixelBBox) -> Self {
        b.as_array()
    }
}

/// Axis-aligned box in degrees (EPSG:4326).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct GeoBBox {
    pub lon_min: f64,
    pub lat_min: f64,
    pub lon_max: f64,
    pub lat_max: f64,
}

impl GeoBBox {
    pub fn new(lon_min: f64, lat_min: f64, lon_max: f64, lat_max: f64) -> Result<Self> {
        let finite = [lon_min, lat_min, lon_max, lat_max]
            .iter()
            .all(|v| v.is_finite());
        let in_range = (-180.0..=180.0).contains(&lon_min)
            && (-180.0..=180.0).contains(&lon_max)
            && (-90.0..=90.0).contains(&lat_min)
            && (-90.0..=90.0).contains(&lat_max);
        if !finite || !in_range || lon_min >= lon_max || lat_min >= lat_max {
            return Err(Error::InvalidBox(format!(
                "geo box ({lon_min}, {lat_min}, {lon_max}, {lat_max})"
            )));
        }
        Ok(Self {
            lon_min,
            lat_min,
            lon_max,
            lat_max,
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.lon_min, self.lat_min, self.lon_max, self.lat_max]
    }

    pub fn iou(&self, other: &GeoBBox) -> f64 {
        rect_iou(self.as_array(), other.as_array())
    }
}

impl TryFrom<[f64; 4]> for GeoBBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        GeoBBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<GeoBBox> for [f64; 4] {
    fn from(b: GeoBBox) -> Self {
        b.as_array()
    }
}

/// Intersection-over-union of two `[min_x, min_y, max_x, max_y]` rectangles.
pub(crate) fn rect_iou(a: [f64; 4], b: [f64; 4]) -> f64 {
    let iw = a[2].min(b[2]) - a[0].max(b[0]);
    let ih = a[3].min(b[3]) - a[1].max(b[1]);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

pub fn iou(a: &PixelBBox, b: &PixelBBox) -> f64 {
    rect_iou(a.as_array(), b.as_array())
}

/// Affine mapping from pixel `(col, row)` to `(lon, lat)`:
///
/// ```text
/// lon = a + b * col + c * row
/// lat = d + e * col + f * row
/// ```
///
/// Serialized as the array `[a, b, c, d, e, f]` (GDAL ordering).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct GeoTransform {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl GeoTransform {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Result<Self> {
        let gt = Self { a, b, c, d, e, f };
        let det = gt.determinant();
        if !det.is_finite() || det == 0.0 || ![a, d].iter().all(|v| v.is_finite()) {
            return Err(Error::SingularGeoTransform);
        }
        Ok(gt)
    }

    /// North-up transform with square pixels of `pixel_deg` degrees.
    pub fn north_up(lon_origin: f64, lat_origin: f64, pixel_deg: f64) -> Result<Self> {
        Self::new(lon_origin, pixel_deg, 0.0, lat_origin, 0.0, -pixel_deg)
    }

    pub fn determinant(&self) -> f64 {
        self.b * self.f - self.c * self.e
    }

    pub fn apply(&self, col: f64, row: f64) -> (f64, f64) {
        (
            self.a + self.b * col + self.c * row,
            self.d + self.e * col + self.f * row,
        )
    }

    pub fn invert(&self, lon: f64, lat: f64) -> Result<(f64, f64)> {
        let det = self.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularGeoTransform);
        }
        let dx = lon - self.a;
        let dy = lat - self.d;
        Ok((
            (self.f * dx - self.c * dy) / det,
            (-self.e * dx + self.b * dy) / det,
        ))
    }

    /// Transform of a sub-window whose pixel `(0, 0)` sits at
    /// `(dx, dy)` in this transform's pixel frame.
    pub fn translated(&self, dx: f64, dy: f64) -> GeoTransform {
        GeoTransform {
            a: self.a + self.b * dx + self.c * dy,
            d: self.d + self.e * dx + self.f * dy,
            ..*self
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }
}

impl TryFrom<[f64; 6]> for GeoTransform {
    type Error = Error;

    fn try_from(v: [f64; 6]) -> Result<Self> {
        GeoTransform::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }
}

impl From<GeoTransform> for [f64; 6] {
    fn from(gt: GeoTransform) -> Self {
        gt.as_array()
    }
}

/// Map all four corners of `box_px` and return their axis-aligned hull.
pub fn geolocate(box_px: &PixelBBox, gt: &GeoTransform) -> Result<GeoBBox> {
    let det = gt.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::SingularGeoTransform);
    }
    let mut lon_min = f64::INFINITY;
    let mut lat_min = f64::INFINITY;
    let mut lon_max = f64::NEG_INFINITY;
    let mut lat_max = f64::NEG_INFINITY;
    for (x, y) in box_px.corners() {
        let (lon, lat) = gt.apply(x, y);
        lon_min = lon_min.min(lon);
        lat_min = lat_min.min(lat);
        lon_max = lon_max.max(lon);
        lat_max = lat_max.max(lat);
    }
    GeoBBox::new(lon_min, lat_min, lon_max, lat_max)
}

/// Inverse of [`geolocate`] for a geographic box: the pixel-space hull of
/// its four corners.
pub fn to_pixel_box(geo: &GeoBBox, gt: &GeoTransform) -> Result<PixelBBox> {
    let corners = [
        (geo.lon_min, geo.lat_min),
        (geo.lon_max, geo.lat_min),
        (geo.lon_max, geo.lat_max),
        (geo.lon_min, geo.lat_max),
    ];
    let mut x0 = f64::INFINITY;
    let mut y0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for (lon, lat) in corners {
        let (x, y) = gt.invert(lon, lat)?;
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    PixelBBox::new(x0, y0, x1, y1)
}
