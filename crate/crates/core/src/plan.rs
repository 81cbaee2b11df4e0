use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::MetricSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Raise,
    Lower,
    Either,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Raise => "raise",
            Direction::Lower => "lower",
            Direction::Either => "either",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Target {
    /// Any value in `(low, high]`.
    Interval { low: f64, high: f64 },
    /// Exactly this value.
    Value { value: f64 },
}

impl Target {
    pub fn direction_from(&self, current: f64) -> Direction {
        match *self {
            Target::Interval { low, high } => {
                if current <= low {
                    Direction::Raise
                } else if current > high {
                    Direction::Lower
                } else {
                    Direction::Either
                }
            }
            Target::Value { value } => {
                if value > current {
                    Direction::Raise
                } else if value < current {
                    Direction::Lower
                } else {
                    Direction::Either
                }
            }
        }
    }

    /// Bounds as `(low, high)`; a value target has `low == high`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Target::Interval { low, high } => (low, high),
            Target::Value { value } => (value, value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub metric: usize,
    pub target: Target,
    pub direction: Direction,
}

impl Change {
    pub fn new(metric: usize, target: Target, current: f64) -> Self {
        Self {
            metric,
            target,
            direction: target.direction_from(current),
        }
    }
}

/// A conjunction of metric changes for one module. Empty means "leave as is".
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Plan {
    pub changes: Vec<Change>,
    pub source_leaf: Option<usize>,
    pub target_leaf: Option<usize>,
}

impl Plan {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn metrics(&self) -> impl Iterator<Item = usize> + '_ {
        self.changes.iter().map(|c| c.metric)
    }

    pub fn describe(&self, schema: &MetricSchema) -> String {
        if self.changes.is_empty() {
            return "(no change)".into();
        }
        self.changes
            .iter()
            .map(|c| match c.target {
                Target::Interval { low, high } => {
                    format!("{} {} to ({low}, {high}]", c.direction, schema.name(c.metric))
                }
                Target::Value { value } => {
                    format!("{} {} to {value}", c.direction, schema.name(c.metric))
                }
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}
