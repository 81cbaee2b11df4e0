pub mod logistic;
pub mod thresholds;
pub mod where_cd;

pub use logistic::{fit_logistic, LogisticModel};
pub use thresholds::{
    alves_thresholds, erni_thresholds, shatnawi_thresholds, threshold_plan, varl,
    weighted_percentile, ThresholdMethod, ThresholdParams, ThresholdSet,
};
pub use where_cd::{cd_plan, where_cluster, Centroids, Cluster};
