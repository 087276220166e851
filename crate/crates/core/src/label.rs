//! Normalized box labels in the common `class cx cy w h` text layout.

use std::fmt::Write as _;

use crate::class::ObjectClass;
use crate::error::{Error, Result};
use crate::geometry::PixelBBox;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Label {
    pub class: ObjectClass,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Label {
    pub fn new(class: ObjectClass, cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(cx) && unit(cy) && w > 0.0 && w <= 1.0 && h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidBox(format!(
                "label ({cx}, {cy}, {w}, {h}) outside the unit square"
            )));
        }
        Ok(Self { class, cx, cy, w, h })
    }

    /// Normalize a pixel box against an image of `width x height` pixels.
    pub fn from_pixel_box(
        class: ObjectClass,
        b: &PixelBBox,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let (w, h) = (width as f64, height as f64);
        Label::new(
            class,
            (b.x0 + b.x1) / 2.0 / w,
            (b.y0 + b.y1) / 2.0 / h,
            b.width() / w,
            b.height() / h,
        )
    }

    pub fn to_pixel_box(&self, width: usize, height: usize) -> Result<PixelBBox> {
        let (w, h) = (width as f64, height as f64);
        PixelBBox::new(
            (self.cx - self.w / 2.0) * w,
            (self.cy - self.h / 2.0) * h,
            (self.cx + self.w / 2.0) * w,
            (self.cy + self.h / 2.0) * h,
        )
    }

    pub fn to_line(&self) -> String {
        format!(
            "{} {:.6} {:.6} {:.6} {:.6}",
            self.class.id(),
            self.cx,
            self.cy,
            self.w,
            self.h
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!("label line {line:?}: expected 5 fields")));
        }
        let class_id: i64 = fields[0]
            .parse()
            .map_err(|_| Error::Parse(format!("label class {:?}", fields[0])))?;
        let mut vals = [0.0f64; 4];
        for (v, s) in vals.iter_mut().zip(&fields[1..]) {
            *v = s
                .parse()
                .map_err(|_| Error::Parse(format!("label value {s:?}")))?;
        }
        Label::new(
            ObjectClass::from_id(class_id)?,
            vals[0],
            vals[1],
            vals[2],
            vals[3],
        )
    }
}

pub fn format_labels(labels: &[Label]) -> String {
    let mut out = String::new();
    for l in labels {
        let _ = writeln!(out, "{}", l.to_line());
    }
    out
}

pub fn parse_labels(text: &str) -> Result<Vec<Label>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(Label::parse_line)
        .collect()
}
