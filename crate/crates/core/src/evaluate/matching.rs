use serde::{Deserialize, Serialize};

use crate::class::EvalClass;
use crate::config::PipelineConfig;
use crate::detection::Detection;
use crate::error::{Error, Result};
use crate::geometry::rect_iou;

use super::ground_truth::{Frame, GroundTruthSet};
use super::metrics::ClassCounts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub pred_id: u64,
    pub gt_index: usize,
    pub iou: f64,
    pub pred_class: EvalClass,
    pub gt_class: EvalClass,
}

/// Outcome of one matching pass.
///
/// `cells[g][p]` counts GT objects of class `g` claimed by a prediction of
/// class `p`; the diagonal holds the true positives. Unclaimed GT objects land
/// in `background_fn`, unclaimed predictions in `background_fp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub classes: Vec<EvalClass>,
    pub cells: Vec<Vec<u64>>,
    pub background_fn: Vec<u64>,
    pub background_fp: Vec<u64>,
    pub pairs: Vec<MatchedPair>,
    pub unmatched_preds: Vec<u64>,
    pub unmatched_gts: Vec<usize>,
}

impl MatchReport {
    fn empty(classes: &[EvalClass]) -> Self {
        let n = classes.len();
        Self {
            classes: classes.to_vec(),
            cells: vec![vec![0; n]; n],
            background_fn: vec![0; n],
            background_fp: vec![0; n],
            pairs: Vec::new(),
            unmatched_preds: Vec::new(),
            unmatched_gts: Vec::new(),
        }
    }

    /// Build a report from aggregate counts alone (no pair bookkeeping).
    pub fn from_confusion(
        classes: &[EvalClass],
        cells: Vec<Vec<u64>>,
        background_fn: Vec<u64>,
        background_fp: Vec<u64>,
    ) -> Result<Self> {
        let n = classes.len();
        if cells.len() != n
            || cells.iter().any(|r| r.len() != n)
            || background_fn.len() != n
            || background_fp.len() != n
        {
            return Err(Error::Parse(format!(
                "confusion counts for {n} classes need {n}x{n} cells and {n} background counts"
            )));
        }
        Ok(Self {
            classes: classes.to_vec(),
            cells,
            background_fn,
            background_fp,
            pairs: Vec::new(),
            unmatched_preds: Vec::new(),
            unmatched_gts: Vec::new(),
        })
    }

    pub fn index_of(&self, class: EvalClass) -> Option<usize> {
        self.classes.iter().position(|&c| c == class)
    }

    pub fn is_merged(&self) -> bool {
        self.classes.iter().all(|&c| c.merged() == c)
    }

    pub fn counts(&self, class: EvalClass) -> Option<ClassCounts> {
        let i = self.index_of(class)?;
        let gt = self.cells[i].iter().sum::<u64>() + self.background_fn[i];
        let tp = self.cells[i][i];
        let cross_in: u64 = (0..self.classes.len())
            .filter(|&g| g != i)
            .map(|g| self.cells[g][i])
            .sum();
        Some(ClassCounts {
            gt,
            tp,
            fp: self.background_fp[i] + cross_in,
            fn_: gt - tp,
        })
    }

    /// Collapse single platforms and clusters into the platform class by
    /// summing cells. Matching is class-agnostic, so this equals matching
    /// merged inputs directly.
    pub fn merged(&self) -> MatchReport {
        let mut classes: Vec<EvalClass> = Vec::new();
        for c in &self.classes {
            if !classes.contains(&c.merged()) {
                classes.push(c.merged());
            }
        }
        let map: Vec<usize> = self
            .classes
            .iter()
            .map(|c| classes.iter().position(|m| *m == c.merged()).unwrap_or(0))
            .collect();
        let mut out = MatchReport::empty(&classes);
        for (g, row) in self.cells.iter().enumerate() {
            for (p, &v) in row.iter().enumerate() {
                out.cells[map[g]][map[p]] += v;
            }
            out.background_fn[map[g]] += self.background_fn[g];
            out.background_fp[map[g]] += self.background_fp[g];
        }
        out.pairs = self
            .pairs
            .iter()
            .map(|p| MatchedPair {
                pred_class: p.pred_class.merged(),
                gt_class: p.gt_class.merged(),
                ..p.clone()
            })
            .collect();
        out.unmatched_preds = self.unmatched_preds.clone();
        out.unmatched_gts = self.unmatched_gts.clone();
        out
    }
}

/// Match in the three-class space.
pub fn match_detections(
    preds: &[Detection],
    gts: &GroundTruthSet,
    cfg: &PipelineConfig,
) -> Result<MatchReport> {
    match_detections_in(preds, gts, cfg, false)
}

/// Greedy one-to-one matching. Predictions go in descending confidence
/// (ties by id); each claims the still-unmatched GT object of highest IoU
/// (ties by index) when that IoU reaches `eval_iou`, whatever the classes.
/// With `merge` both sides are mapped to the merged class space first.
///
/// Geographic GT needs geolocated predictions. Pixel-frame GT is compared
/// against prediction pixel boxes, and only on the same chip when the GT
/// entry names one.
pub fn match_detections_in(
    preds: &[Detection],
    gts: &GroundTruthSet,
    cfg: &PipelineConfig,
    merge: bool,
) -> Result<MatchReport> {
    let classes: &[EvalClass] = if merge {
        &EvalClass::MERGED
    } else {
        &EvalClass::UNMERGED
    };
    let class_of = |c: EvalClass| {
        let c = if merge { c.merged() } else { c };
        classes.iter().position(|&k| k == c).unwrap_or(0)
    };
    let frame = gts.frame()?;

    let pred_boxes: Vec<[f64; 4]> = match frame {
        Some(Frame::Geo) => preds
            .iter()
            .map(|d| {
                d.box_geo.map(|b| b.as_array()).ok_or_else(|| {
                    Error::MixedFrames(format!(
                        "geographic ground truth but detection {} is not geolocated",
                        d.id
                    ))
                })
            })
            .collect::<Result<_>>()?,
        _ => preds.iter().map(|d| d.box_px.as_array()).collect(),
    };
    let gt_classes: Vec<usize> = gts
        .entries
        .iter()
        .map(|g| class_of(g.class_id.into()))
        .collect();

    let mut report = MatchReport::empty(classes);

    // GT sorted by left edge, so each prediction only scans a window
    let mut by_x0: Vec<usize> = (0..gts.len()).collect();
    by_x0.sort_by(|&a, &b| gts.entries[a].bbox[0].total_cmp(&gts.entries[b].bbox[0]));
    let max_w = gts
        .entries
        .iter()
        .map(|g| g.bbox[2] - g.bbox[0])
        .fold(0.0, f64::max);

    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .total_cmp(&preds[a].confidence)
            .then_with(|| preds[a].id.cmp(&preds[b].id))
    });

    let mut taken = vec![false; gts.len()];
    for &pi in &order {
        let pred = &preds[pi];
        let pb = pred_boxes[pi];
        let pc = class_of(pred.class.into());
        let window = if cfg.eval_iou > 0.0 {
            let lo = by_x0.partition_point(|&g| gts.entries[g].bbox[0] <= pb[0] - max_w);
            let hi = by_x0.partition_point(|&g| gts.entries[g].bbox[0] < pb[2]);
            &by_x0[lo..hi.max(lo)]
        } else {
            &by_x0[..]
        };
        let mut best: Option<(f64, usize)> = None;
        for &gi in window {
            if taken[gi] {
                continue;
            }
            let g = &gts.entries[gi];
            if frame == Some(Frame::Px) {
                if let Some(chip) = &g.chip_id {
                    if *chip != pred.chip_id {
                        continue;
                    }
                }
            }
            let v = rect_iou(pb, g.bbox);
            if v < cfg.eval_iou {
                continue;
            }
            let better = match best {
                None => true,
                Some((bv, bi)) => v > bv || (v == bv && gi < bi),
            };
            if better {
                best = Some((v, gi));
            }
        }
        match best {
            Some((v, gi)) => {
                taken[gi] = true;
                let gc = gt_classes[gi];
                report.cells[gc][pc] += 1;
                report.pairs.push(MatchedPair {
                    pred_id: pred.id,
                    gt_index: gi,
                    iou: v,
                    pred_class: classes[pc],
                    gt_class: classes[gc],
                });
            }
            None => {
                report.background_fp[pc] += 1;
                report.unmatched_preds.push(pred.id);
            }
        }
    }
    for (gi, &t) in taken.iter().enumerate() {
        if !t {
            report.background_fn[gt_classes[gi]] += 1;
            report.unmatched_gts.push(gi);
        }
    }
    report.unmatched_preds.sort_unstable();
    Ok(report)
}
