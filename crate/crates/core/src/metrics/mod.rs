//! Evaluation metrics and the label-efficiency protocol.

mod multilabel;
mod protocol;
mod regression;
mod segmentation;

pub use multilabel::{average_precision, multilabel_metrics, LabelScore, MultiLabelResult, DEFAULT_THRESHOLD};
pub use protocol::{epoch_schedule, subset_sample, subset_size, SubsetPlan, EPOCH_TABLE};
pub use regression::{
    efficiency_experiment, efficiency_trial, r_squared, ridge_fit, ridge_probe, EfficiencyConfig, EfficiencyTrial,
};
pub use segmentation::{segmentation_metrics, ClassScore, ConfusionMatrix, SegmentationResult};

/// `key=value` lines.
pub fn format_report(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Two-line CSV: header of keys, then values.
pub fn format_report_csv(pairs: &[(String, String)]) -> String {
    let keys: Vec<&str> = pairs.iter().map(|(k, _)| k.as_str()).collect();
    let vals: Vec<&str> = pairs.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", keys.join(","), vals.join(","))
}
