//! Detector outputs. [`RawDetection`] is the JSON Lines contract any
//! external detector writes; [`Detection`] is the enriched in-memory form.

use serde::{Deserialize, Serialize};

use crate::class::ObjectClass;
use crate::error::{Error, Result};
use crate::geometry::{GeoBBox, PixelBBox};

/// One line of a detector output file:
/// `{"chip_id": "...", "class_id": 0, "conf": 0.93, "bbox_px": [x0, y0, x1, y1]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDetection {
    pub chip_id: String,
    pub class_id: ObjectClass,
    pub conf: f64,
    pub bbox_px: PixelBBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub id: u64,
    pub chip_id: String,
    pub class: ObjectClass,
    pub confidence: f64,
    pub box_px: PixelBBox,
    pub box_geo: Option<GeoBBox>,
}

impl Detection {
    pub fn from_raw(id: u64, raw: &RawDetection) -> Result<Self> {
        if !(0.0..=1.0).contains(&raw.conf) {
            return Err(Error::Parse(format!(
                "confidence {} outside [0, 1] on chip {}",
                raw.conf, raw.chip_id
            )));
        }
        Ok(Self {
            id,
            chip_id: raw.chip_id.clone(),
            class: raw.class_id,
            confidence: raw.conf,
            box_px: raw.bbox_px,
            box_geo: None,
        })
    }

    pub fn to_raw(&self) -> RawDetection {
        RawDetection {
            chip_id: self.chip_id.clone(),
            class_id: self.class,
            conf: self.confidence,
            bbox_px: self.box_px,
        }
    }

    pub fn geo(&self) -> Result<&GeoBBox> {
        self.box_geo
            .as_ref()
            .ok_or(Error::UngeolocatedDetection(self.id))
    }
}

pub fn parse_jsonl(text: &str) -> Result<Vec<RawDetection>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map_err(|e| Error::Parse(format!("detections line {}: {e}", n + 1)))
        })
        .collect()
}

pub fn to_jsonl(dets: &[RawDetection]) -> Result<String> {
    let mut out = String::new();
    for d in dets {
        out.push_str(&serde_json::to_string(d)?);
        out.push('\n');
    }
    Ok(out)
}
