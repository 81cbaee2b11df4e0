//! Outlier-threshold planners: μ+σ, VARL from a univariate logistic model,
//! and LOC-weighted percentiles.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::logistic::{fit_logistic, LogisticModel};
use crate::data::{MetricTable, ModuleRecord, LOC};
use crate::error::{Error, Result};
use crate::plan::{Change, Plan, Target};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMethod {
    Erni,
    Shatnawi,
    Alves,
}

impl fmt::Display for ThresholdMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMethod::Erni => "erni",
            ThresholdMethod::Shatnawi => "shatnawi",
            ThresholdMethod::Alves => "alves",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub method: ThresholdMethod,
    /// Per schema metric; `None` when the metric failed admission.
    pub thresholds: Vec<Option<f64>>,
    /// Logistic Wald p-value per metric (absent for `erni`).
    pub p_values: Vec<Option<f64>>,
    pub params: ThresholdParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub p0: Option<f64>,
    pub p1: Option<f64>,
    pub percentile: Option<f64>,
}

impl ThresholdSet {
    pub fn admitted(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.thresholds
            .iter()
            .enumerate()
            .filter_map(|(m, t)| t.map(|t| (m, t)))
    }
}

/// Significance level used to screen metrics through the logistic fit.
pub const ADMISSION_P: f64 = 0.05;

fn screen(train: &MetricTable) -> Vec<Option<LogisticModel>> {
    let labels = train.labels();
    (0..train.n_metrics())
        .map(|m| fit_logistic(&train.column(m), &labels).ok())
        .collect()
}

pub fn erni_thresholds(train: &MetricTable) -> Result<ThresholdSet> {
    if train.is_empty() {
        return Err(Error::EmptyTable);
    }
    let thresholds = (0..train.n_metrics())
        .map(|m| {
            let (mu, sigma) = stats::mean_std(&train.column(m));
            Some(mu + sigma)
        })
        .collect();
    Ok(ThresholdSet {
        method: ThresholdMethod::Erni,
        thresholds,
        p_values: vec![None; train.n_metrics()],
        params: ThresholdParams::default(),
    })
}

/// VARL per metric: the value at which the fitted risk reaches `p1`.
/// Metrics are admitted when the slope is positive and its Wald p-value is
/// at most `p0`.
pub fn shatnawi_thresholds(train: &MetricTable, p0: f64, p1: f64) -> Result<ThresholdSet> {
    if train.is_empty() {
        return Err(Error::EmptyTable);
    }
    let models = screen(train);
    // A VARL under the smallest observed value marks every module and
    // asks for a value no module has; such metrics get no threshold.
    let thresholds = models
        .iter()
        .enumerate()
        .map(|(m, fit)| match fit {
            Some(model) if model.p_value <= p0 && model.beta > 0.0 => {
                let v = varl(model, p1);
                let lowest = train.rows.iter().map(|r| r.metrics[m]).fold(f64::INFINITY, f64::min);
                (v >= lowest).then_some(v)
            }
            _ => None,
        })
        .collect();
    Ok(ThresholdSet {
        method: ThresholdMethod::Shatnawi,
        thresholds,
        p_values: models.iter().map(|f| f.map(|m| m.p_value)).collect(),
        params: ThresholdParams {
            p0: Some(p0),
            p1: Some(p1),
            percentile: None,
        },
    })
}

pub fn varl(model: &LogisticModel, p1: f64) -> f64 {
    ((p1 / (1.0 - p1)).ln() - model.alpha) / model.beta
}

/// Smallest value whose cumulative normalized weight reaches `percentile`.
pub fn weighted_percentile(values: &[f64], weights: &[f64], percentile: f64) -> Result<f64> {
    let total: f64 = weights.iter().sum();
    if values.is_empty() || total <= 0.0 {
        return Err(Error::InvalidInput("weights sum to zero".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut cumulative = 0.0;
    for &i in &order {
        cumulative += weights[i] / total;
        if cumulative >= percentile - 1e-12 {
            return Ok(values[i]);
        }
    }
    Ok(values[*order.last().unwrap()])
}

pub fn alves_thresholds(train: &MetricTable, percentile: f64) -> Result<ThresholdSet> {
    if train.is_empty() {
        return Err(Error::EmptyTable);
    }
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "percentile {percentile} outside (0, 1]"
        )));
    }
    let weights = train.column(LOC);
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidInput("every loc is zero; cannot weight".into()));
    }
    let models = screen(train);
    let thresholds = models
        .iter()
        .enumerate()
        .map(|(m, fit)| match fit {
            Some(model) if model.p_value <= ADMISSION_P => {
                weighted_percentile(&train.column(m), &weights, percentile).ok()
            }
            _ => None,
        })
        .collect();
    Ok(ThresholdSet {
        method: ThresholdMethod::Alves,
        thresholds,
        p_values: models.iter().map(|f| f.map(|m| m.p_value)).collect(),
        params: ThresholdParams {
            percentile: Some(percentile),
            ..ThresholdParams::default()
        },
    })
}

/// Caps every metric above its threshold at the threshold.
pub fn threshold_plan(thresholds: &ThresholdSet, module: &ModuleRecord) -> Plan {
    let changes = thresholds
        .admitted()
        .filter(|&(m, t)| module.metrics[m] > t)
        .map(|(m, t)| Change::new(m, Target::Value { value: t }, module.metrics[m]))
        .collect();
    Plan {
        changes,
        ..Plan::default()
    }
}
