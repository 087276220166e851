use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::class::EvalClass;
use crate::config::PipelineConfig;
use crate::detection::Detection;
use crate::error::{Error, Result};

use super::ground_truth::GroundTruthSet;
use super::matching::{match_detections_in, MatchReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub gt: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// One row of the results table. Zero denominators give zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: EvalClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_id: Option<i64>,
    pub gt: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

impl ClassMetrics {
    pub fn from_counts(class: EvalClass, c: ClassCounts) -> Self {
        let (tp, fp, fn_) = (c.tp as f64, c.fp as f64, c.fn_ as f64);
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Self {
            class,
            class_id: class.class_id().map(i64::from),
            gt: c.gt,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision,
            recall,
            f1: ratio(2.0 * precision * recall, precision + recall),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(id) = self.class_id {
            if self.class.class_id().map(i64::from) != Some(id) {
                return Err(Error::InvalidClassId(id));
            }
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.precision) && unit(self.recall) && unit(self.f1)) {
            return Err(Error::Parse(format!(
                "{} metrics outside [0, 1]",
                self.class.name()
            )));
        }
        Ok(())
    }
}

pub fn compute_metrics(report: &MatchReport) -> Vec<ClassMetrics> {
    report
        .classes
        .iter()
        .filter_map(|&c| report.counts(c).map(|k| ClassMetrics::from_counts(c, k)))
        .collect()
}

/// Rows are GT classes, columns predicted classes followed by the
/// background-FN column. `percent` is relative to each GT row total; the
/// background-FP row has no total and stays as raw counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<EvalClass>,
    pub counts: Vec<Vec<u64>>,
    pub row_totals: Vec<u64>,
    pub percent: Vec<Vec<f64>>,
    pub background_fp: Vec<u64>,
}

/// With `merged`, single platforms and clusters are collapsed first; a
/// report that is already merged is used as is.
pub fn confusion_matrix(report: &MatchReport, merged: bool) -> ConfusionMatrix {
    let r = if merged {
        report.merged()
    } else {
        report.clone()
    };
    let counts: Vec<Vec<u64>> = r
        .cells
        .iter()
        .zip(&r.background_fn)
        .map(|(row, &bfn)| row.iter().copied().chain([bfn]).collect())
        .collect();
    let row_totals: Vec<u64> = counts.iter().map(|row| row.iter().sum()).collect();
    let percent = counts
        .iter()
        .zip(&row_totals)
        .map(|(row, &t)| row.iter().map(|&v| 100.0 * ratio(v as f64, t as f64)).collect())
        .collect();
    ConfusionMatrix {
        classes: r.classes,
        counts,
        row_totals,
        percent,
        background_fp: r.background_fp,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MatchReport,
    pub metrics: Vec<ClassMetrics>,
    pub matrix: ConfusionMatrix,
}

/// Match, score and tabulate. With `merge` the platform classes are merged
/// on both sides before matching.
pub fn evaluate_run(
    preds: &[Detection],
    gts: &GroundTruthSet,
    cfg: &PipelineConfig,
    merge: bool,
) -> Result<Evaluation> {
    let report = match_detections_in(preds, gts, cfg, merge)?;
    let metrics = compute_metrics(&report);
    let matrix = confusion_matrix(&report, merge);
    Ok(Evaluation {
        report,
        metrics,
        matrix,
    })
}

/// Serialized evaluation result: per-class rows before merging, the merged
/// block and the confusion matrix (merged when `merge` is set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default)]
    pub merge: bool,
    #[serde(default)]
    pub per_class: Vec<ClassMetrics>,
    #[serde(default)]
    pub merged: Vec<ClassMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
}

impl EvalReport {
    pub fn from_report(report: &MatchReport, merge: bool) -> Self {
        Self {
            dataset: None,
            model: None,
            merge,
            per_class: compute_metrics(report),
            merged: compute_metrics(&report.merged()),
            confusion: Some(confusion_matrix(report, merge)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for m in self.per_class.iter().chain(&self.merged) {
            m.validate()?;
        }
        if let Some(cm) = &self.confusion {
            let n = cm.classes.len();
            if cm.counts.len() != n
                || cm.counts.iter().any(|r| r.len() != n + 1)
                || cm.background_fp.len() != n
            {
                return Err(Error::Parse("confusion matrix has inconsistent shape".into()));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let r: EvalReport = serde_json::from_str(text)?;
        r.validate()?;
        Ok(r)
    }

    /// Rows in table order: the per-class rows, then merged rows for classes
    /// not already listed.
    pub fn rows(&self) -> Vec<&ClassMetrics> {
        let mut rows: Vec<&ClassMetrics> = self.per_class.iter().collect();
        for m in &self.merged {
            if !rows.iter().any(|r| r.class == m.class) {
                rows.push(m);
            }
        }
        rows
    }
}

/// Fixed-width text table with the columns
/// `Dataset  Model  Class  GT  TP  FP  FN  Pr  Rc  F1`.
pub fn render_table(report: &EvalReport) -> String {
    let dataset = report.dataset.as_deref().unwrap_or("-");
    let model = report.model.as_deref().unwrap_or("-");
    let mut out = format!(
        "{:<18} {:<12} {:<18} {:>7} {:>7} {:>7} {:>7} {:>4} {:>4} {:>4}\n",
        "Dataset", "Model", "Class", "GT", "TP", "FP", "FN", "Pr", "Rc", "F1"
    );
    for m in report.rows() {
        let _ = writeln!(
            out,
            "{:<18} {:<12} {:<18} {:>7} {:>7} {:>7} {:>7} {:>4.2} {:>4.2} {:>4.2}",
            dataset,
            model,
            m.class.name(),
            m.gt,
            m.tp,
            m.fp,
            m.fn_,
            m.precision,
            m.recall,
            m.f1
        );
    }
    out
}
