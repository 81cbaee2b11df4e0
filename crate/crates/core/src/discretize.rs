//! Supervised discretization of metric columns.
//!
//! Each column is cut recursively in two at the midpoint that minimizes the
//! expected standard deviation of the defect counts, `Σ (n_r/n)·σ_r`.
//! Recursion stops when a cut no longer buys a relative reduction of
//! `rel_tolerance · σ_parent` or would leave a side with fewer rows than the
//! size floor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::MetricTable;
use crate::error::{Error, Result};

/// Scores closer than this are treated as ties (leftmost wins).
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRules {
    /// Absolute minimum rows on each side of a cut.
    pub min_rows: usize,
    /// Also require `⌈√n⌉` rows per side.
    pub sqrt_floor: bool,
    pub rel_tolerance: f64,
}

impl Default for SplitRules {
    fn default() -> Self {
        Self {
            min_rows: 4,
            sqrt_floor: true,
            rel_tolerance: 0.01,
        }
    }
}

impl SplitRules {
    /// Rows required on each side when cutting `n` rows of a column that
    /// holds `column_rows` in total. The floor never exceeds half the
    /// column, so a balanced first cut of a tiny column stays possible.
    pub fn side_floor(&self, n: usize, column_rows: usize) -> usize {
        let mut floor = self.min_rows;
        if self.sqrt_floor {
            floor = floor.max((n as f64).sqrt().ceil() as usize);
        }
        floor.min(column_rows / 2).max(1)
    }
}

/// Half-open value range `(low, high]`; the first range of a metric is
/// closed at `low`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub low: f64,
    pub high: f64,
    pub closed_low: bool,
    pub count: usize,
    pub defect_std: f64,
}

impl Range {
    pub fn contains(&self, value: f64) -> bool {
        (value > self.low || (self.closed_low && value == self.low)) && value <= self.high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub value: f64,
    /// Rows at or below the cut.
    pub left_count: usize,
    /// Expected defect σ after the cut.
    pub score: f64,
    pub parent_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRanges {
    pub metric: usize,
    pub ranges: Vec<Range>,
    /// Expected defect σ over the final ranges (`M_v`).
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    /// One entry per schema metric, in schema order.
    pub metrics: Vec<MetricRanges>,
    /// Metric indexes sorted by ascending score.
    pub order: Vec<usize>,
}

impl Discretization {
    pub fn best_metric(&self) -> Option<usize> {
        self.order.first().copied()
    }
}

/// Running integer moments; `n·Σx² − (Σx)²` stays exact.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    sum: u64,
    sum_sq: u64,
}

impl Moments {
    fn push(&mut self, x: u32) {
        let x = u64::from(x);
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn minus(self, other: Moments) -> Moments {
        Moments {
            n: self.n - other.n,
            sum: self.sum - other.sum,
            sum_sq: self.sum_sq - other.sum_sq,
        }
    }

    fn std(self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let num = u128::from(self.n) * u128::from(self.sum_sq) - u128::from(self.sum).pow(2);
        (num as f64).sqrt() / self.n as f64
    }
}

fn moments(rows: &[(f64, u32)]) -> Moments {
    let mut m = Moments::default();
    for &(_, d) in rows {
        m.push(d);
    }
    m
}

fn check_inputs(values: &[f64], defects: &[u32]) -> Result<()> {
    if values.len() != defects.len() {
        return Err(Error::InvalidInput(format!(
            "{} values but {} defect counts",
            values.len(),
            defects.len()
        )));
    }
    if values.len() < 2 {
        return Err(Error::InvalidInput("need at least 2 rows to split".into()));
    }
    Ok(())
}

fn sorted_pairs(values: &[f64], defects: &[u32]) -> Vec<(f64, u32)> {
    let mut pairs: Vec<(f64, u32)> = values.iter().copied().zip(defects.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Best accepted cut of a column, or `None` if no cut passes the rules.
pub fn best_split(values: &[f64], defects: &[u32], rules: &SplitRules) -> Result<Option<Cut>> {
    check_inputs(values, defects)?;
    Ok(best_split_sorted(&sorted_pairs(values, defects), rules, values.len()))
}

fn best_split_sorted(rows: &[(f64, u32)], rules: &SplitRules, column_rows: usize) -> Option<Cut> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let total = moments(rows);
    let parent_std = total.std();
    if parent_std == 0.0 {
        return None;
    }
    let floor = rules.side_floor(n, column_rows);
    let mut left = Moments::default();
    let mut best: Option<Cut> = None;
    for i in 1..n {
        left.push(rows[i - 1].1);
        if i < floor || n - i < floor || rows[i - 1].0 == rows[i].0 {
            continue;
        }
        let right = total.minus(left);
        let score = (i as f64 * left.std() + (n - i) as f64 * right.std()) / n as f64;
        if best.is_none_or(|b| score < b.score - TIE_EPS) {
            best = Some(Cut {
                value: (rows[i - 1].0 + rows[i].0) / 2.0,
                left_count: i,
                score,
                parent_std,
            });
        }
    }
    best.filter(|c| parent_std - c.score > rules.rel_tolerance * parent_std)
}

/// Recursively cuts a column into ranges.
pub fn discretize_metric(values: &[f64], defects: &[u32], rules: &SplitRules) -> Result<Vec<Range>> {
    check_inputs(values, defects)?;
    Ok(ranges_sorted(&sorted_pairs(values, defects), rules))
}

pub(crate) fn ranges_sorted(rows: &[(f64, u32)], rules: &SplitRules) -> Vec<Range> {
    let mut bounds = Vec::new();
    collect_cuts(rows, 0, rules, rows.len(), &mut bounds);
    let mut ranges = Vec::with_capacity(bounds.len() + 1);
    let mut start = 0;
    let mut low = rows[0].0;
    for (k, end) in bounds.iter().copied().chain(std::iter::once(rows.len())).enumerate() {
        let part = &rows[start..end];
        let high = if end == rows.len() {
            rows[end - 1].0
        } else {
            (rows[end - 1].0 + rows[end].0) / 2.0
        };
        ranges.push(Range {
            low,
            high,
            closed_low: k == 0,
            count: part.len(),
            defect_std: moments(part).std(),
        });
        low = high;
        start = end;
    }
    ranges
}

fn collect_cuts(rows: &[(f64, u32)], offset: usize, rules: &SplitRules, column_rows: usize, out: &mut Vec<usize>) {
    if let Some(cut) = best_split_sorted(rows, rules, column_rows) {
        let (l, r) = rows.split_at(cut.left_count);
        collect_cuts(l, offset, rules, column_rows, out);
        out.push(offset + cut.left_count);
        collect_cuts(r, offset + cut.left_count, rules, column_rows, out);
    }
}

/// Expected σ over ranges, weighted by range size.
pub fn expected_std(ranges: &[Range]) -> f64 {
    let n: usize = ranges.iter().map(|r| r.count).sum();
    if n == 0 {
        return 0.0;
    }
    ranges
        .iter()
        .map(|r| r.count as f64 / n as f64 * r.defect_std)
        .sum()
}

pub(crate) fn discretize_columns(
    table: &MetricTable,
    rows: &[usize],
    metrics: &[usize],
    rules: &SplitRules,
) -> Vec<MetricRanges> {
    metrics
        .par_iter()
        .map(|&m| {
            let mut pairs: Vec<(f64, u32)> = rows
                .iter()
                .map(|&i| (table.rows[i].metrics[m], table.rows[i].n_defects))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let ranges = ranges_sorted(&pairs, rules);
            MetricRanges {
                metric: m,
                score: expected_std(&ranges),
                ranges,
            }
        })
        .collect()
}

pub(crate) fn order_by_score(metrics: &[MetricRanges]) -> Vec<usize> {
    let mut order: Vec<&MetricRanges> = metrics.iter().collect();
    order.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.metric.cmp(&b.metric)));
    order.iter().map(|m| m.metric).collect()
}

pub fn discretize_table(table: &MetricTable, rules: &SplitRules) -> Result<Discretization> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let rows: Vec<usize> = (0..table.len()).collect();
    let all: Vec<usize> = (0..table.n_metrics()).collect();
    let metrics = discretize_columns(table, &rows, &all, rules);
    let order = order_by_score(&metrics);
    Ok(Discretization { metrics, order })
}
