//! Scoring a cleaned detection set against ground truth: greedy IoU matching,
//! optional merging of the two platform classes, per-class precision, recall
//! and F1, and the confusion matrix with background row and column. The
//! oracle detector turns labels into noisy detections for closed-loop runs.

mod ground_truth;
mod matching;
mod metrics;
mod oracle;

pub use ground_truth::{Frame, GroundTruth, GroundTruthSet};
pub use matching::{match_detections, match_detections_in, MatchReport, MatchedPair};
pub use metrics::{
    compute_metrics, confusion_matrix, evaluate_run, render_table, ClassCounts, ClassMetrics,
    ConfusionMatrix, EvalReport, Evaluation,
};
pub use oracle::{labels_for_chip, oracle_detector, OracleChip, OracleParams};
