//! Row-major single-band rasters.

use crate::error::{Error, Result};

/// Backscatter raster in dB with an optional nodata sentinel. NaN is always
/// treated as nodata.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterF {
    width: usize,
    height: usize,
    values: Vec<f32>,
    nodata: Option<f32>,
}

impl RasterF {
    pub fn new(width: usize, height: usize, values: Vec<f32>, nodata: Option<f32>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        Ok(Self {
            width,
            height,
            values,
            nodata,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], None)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn nodata(&self) -> Option<f32> {
        self.nodata
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.values[y * self.width + x] = v;
    }

    pub fn is_nodata(&self, v: f32) -> bool {
        v.is_nan() || self.nodata == Some(v)
    }
}

/// 8-bit intensity raster (quantized backscatter, chips, masks).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Raster8 {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl Raster8 {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [u8] {
        &mut self.values
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.values[y * self.width + x] = v;
    }

    /// Copy the `w x h` window whose top-left pixel is `(x, y)`.
    pub fn window(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Raster8> {
        if x + w > self.width || y + h > self.height {
            return Err(Error::InvalidRaster(format!(
                "window {w}x{h}+{x}+{y} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut values = Vec::with_capacity(w * h);
        for row in y..y + h {
            let start = row * self.width + x;
            values.extend_from_slice(&self.values[start..start + w]);
        }
        Raster8::new(w, h, values)
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster(format!(
            "empty raster {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidRaster(format!(
            "{len} values for a {width}x{height} raster"
        )));
    }
    Ok(())
}
