use serde::{Deserialize, Serialize};

use crate::class::ObjectClass;
use crate::error::{Error, Result};
use crate::geometry::{GeoBBox, PixelBBox};

/// Coordinate frame of a box: geographic degrees or chip pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Geo,
    Px,
}

/// One reference object, stored as one JSON line:
/// `{"bbox": [x0, y0, x1, y1], "class_id": 0, "region": "NS", "frame": "geo"}`
/// plus an optional `chip_id` for pixel-frame entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub bbox: [f64; 4],
    pub class_id: ObjectClass,
    pub region: String,
    pub frame: Frame,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chip_id: Option<String>,
}

impl GroundTruth {
    pub fn geo(class: ObjectClass, b: &GeoBBox, region: impl Into<String>) -> Self {
        Self {
            bbox: b.as_array(),
            class_id: class,
            region: region.into(),
            frame: Frame::Geo,
            chip_id: None,
        }
    }

    pub fn px(class: ObjectClass, b: &PixelBBox, chip_id: impl Into<String>, region: impl Into<String>) -> Self {
        Self {
            bbox: b.as_array(),
            class_id: class,
            region: region.into(),
            frame: Frame::Px,
            chip_id: Some(chip_id.into()),
        }
    }

    fn validate(&self) -> Result<()> {
        let [x0, y0, x1, y1] = self.bbox;
        match self.frame {
            Frame::Geo => GeoBBox::new(x0, y0, x1, y1).map(|_| ()),
            Frame::Px => PixelBBox::new(x0, y0, x1, y1).map(|_| ()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruthSet {
    pub entries: Vec<GroundTruth>,
}

impl GroundTruthSet {
    pub fn new(entries: Vec<GroundTruth>) -> Result<Self> {
        for e in &entries {
            e.validate()?;
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The shared frame of every entry; `None` for an empty set.
    pub fn frame(&self) -> Result<Option<Frame>> {
        let mut frame = None;
        for e in &self.entries {
            match frame {
                None => frame = Some(e.frame),
                Some(f) if f != e.frame => return Err(Error::MixedFrames("ground truth mixes geo and px boxes".into())),
                _ => {}
            }
        }
        Ok(frame)
    }

    pub fn parse_jsonl(text: &str) -> Result<Self> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| {
                let gt: GroundTruth = serde_json::from_str(l)
                    .map_err(|e| Error::Parse(format!("ground truth line {}: {e}", n + 1)))?;
                gt.validate()
                    .map_err(|e| Error::Parse(format!("ground truth line {}: {e}", n + 1)))?;
                Ok(gt)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }
}
