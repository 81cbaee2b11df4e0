//! Text, CSV and JSON renderings of every result table. Each rendering
//! starts with a provenance header naming the settings that produced it.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::baselines::ThresholdSet;
use crate::data::{MetricSchema, ModuleRecord};
use crate::discretize::{Discretization, Range};
use crate::error::{Error, Result};
use crate::experiment::{
    DatasetOutcome, ExperimentReport, FrequencyReport, MagnitudeReport, StoppingEntry, TrialResult,
};
use crate::oracle::{ForestConfig, OracleScore};
use crate::plan::{Plan, Target};
use crate::stats::RankTable;
use crate::xtree::DirectionTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidInput(format!("unknown format `{s}` (text, csv, json)"))),
        }
    }
}

/// Ordered `key = value` pairs describing how a report was made.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// `# key = value` lines, shared by the text and CSV renderings.
    pub fn comment_block(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let map: Map<String, Value> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        Value::Object(map)
    }
}

/// A flat table. Cells are JSON values so the JSON rendering keeps types;
/// the text rendering shows `null` as blank.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Show numeric zero as `.` in text.
    pub dot_zero: bool,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            dot_zero: false,
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format, provenance: &Provenance) -> String {
        match format {
            Format::Text => format!("{}{}", provenance.comment_block(), self.to_text()),
            Format::Csv => format!("{}{}", provenance.comment_block(), self.to_csv()),
            Format::Json => pretty(&json!({
                "provenance": provenance.to_json(),
                "table": self.to_json(),
            })),
        }
    }

    pub fn to_text(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| text_cell(v, self.dot_zero)).collect())
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|c| {
                cells
                    .iter()
                    .map(|r| r[c].chars().count())
                    .chain([self.columns[c].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        // Numeric columns align right.
        let numeric: Vec<bool> = (0..self.columns.len())
            .map(|c| self.rows.iter().all(|r| r[c].is_number() || r[c].is_null()) && !self.rows.is_empty())
            .collect();
        let line = |out: &mut String, row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    if numeric[c] {
                        format!("{s:>w$}", w = widths[c])
                    } else {
                        format!("{s:<w$}", w = widths[c])
                    }
                })
                .collect();
            out.push_str(parts.join("  ").trim_end());
            out.push('\n');
        };
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        line(&mut out, &self.columns);
        for r in &cells {
            line(&mut out, r);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("write to memory");
        for r in &self.rows {
            w.write_record(r.iter().map(csv_cell)).expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 cells")
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    self.columns
                        .iter()
                        .cloned()
                        .zip(r.iter().cloned())
                        .collect(),
                )
            })
            .collect();
        json!({ "title": self.title, "rows": rows })
    }
}

/// Renders several tables as one document: text tables separated by a
/// blank line, CSV sections likewise, JSON as an array.
pub fn render_all(tables: &[Table], format: Format, provenance: &Provenance) -> String {
    match format {
        Format::Json => pretty(&json!({
            "provenance": provenance.to_json(),
            "tables": tables.iter().map(Table::to_json).collect::<Vec<_>>(),
        })),
        Format::Text | Format::Csv => {
            let body: Vec<String> = tables
                .iter()
                .map(|t| if format == Format::Text { t.to_text() } else { format!("# {}\n{}", t.title, t.to_csv()) })
                .collect();
            format!("{}{}", provenance.comment_block(), body.join("\n"))
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn fmt_number(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x:.0}")
    } else {
        let s = format!("{x:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn text_cell(v: &Value, dot_zero: bool) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => if *b { "yes" } else { "no" }.into(),
        Value::Number(n) => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            if dot_zero && x == 0.0 {
                ".".into()
            } else {
                fmt_number(x)
            }
        }
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn range_text(r: &Range) -> String {
    let open = if r.closed_low { '[' } else { '(' };
    format!("{open}{}, {}]", fmt_number(r.low), fmt_number(r.high))
}

/// Per-metric ranges, metrics in ascending `M_v` order.
pub fn discretization_table(title: &str, disc: &Discretization, schema: &MetricSchema) -> Table {
    let mut t = Table::new(title, &["metric", "m_v", "range", "low", "high", "n", "sigma"]);
    for &m in &disc.order {
        let mr = &disc.metrics[m];
        for r in &mr.ranges {
            t.push(vec![
                schema.name(mr.metric).into(),
                num(mr.score),
                range_text(r).into(),
                num(r.low),
                num(r.high),
                r.count.into(),
                num(r.defect_std),
            ]);
        }
    }
    t
}

/// One row per change; an empty plan gets a single row with no metric.
pub fn plan_table(title: &str, plans: &[(&ModuleRecord, Plan)], schema: &MetricSchema) -> Table {
    let mut t = Table::new(
        title,
        &["module", "defects", "metric", "current", "direction", "low", "high"],
    );
    for (module, plan) in plans {
        if plan.is_empty() {
            t.push(vec![
                module.module_name.clone().into(),
                module.n_defects.into(),
                Value::Null,
                Value::Null,
                "none".into(),
                Value::Null,
                Value::Null,
            ]);
        }
        for c in &plan.changes {
            let (low, high) = match c.target {
                Target::Interval { low, high } => (num(low), num(high)),
                Target::Value { value } => (Value::Null, num(value)),
            };
            t.push(vec![
                module.module_name.clone().into(),
                module.n_defects.into(),
                schema.name(c.metric).into(),
                num(module.metrics[c.metric]),
                c.direction.to_string().into(),
                low,
                high,
            ]);
        }
    }
    t
}

pub fn rank_table(outcomes: &[DatasetOutcome]) -> Table {
    let mut t = Table::new(
        "improvement ranks",
        &["dataset", "rank", "treatment", "median", "iqr", "p25", "p75", "n"],
    );
    for o in outcomes {
        if let Some(ranks) = &o.ranks {
            push_ranks(&mut t, &o.name, ranks);
        }
    }
    t
}

pub fn push_ranks(t: &mut Table, dataset: &str, ranks: &RankTable) {
    for e in &ranks.entries {
        t.push(vec![
            dataset.into(),
            e.rank.into(),
            e.name.clone().into(),
            num(e.median),
            num(e.iqr),
            num(e.p25),
            num(e.p75),
            e.n.into(),
        ]);
    }
}

/// Metrics down the side, one column per dataset and treatment.
pub fn frequency_table(freq: &FrequencyReport) -> Table {
    let headers: Vec<String> = freq
        .columns
        .iter()
        .map(|c| format!("{}/{}", c.dataset, c.treatment))
        .collect();
    let mut t = Table {
        title: "percent of repeats mentioning each metric".into(),
        columns: std::iter::once("metric".to_string()).chain(headers).collect(),
        rows: Vec::new(),
        dot_zero: true,
    };
    for (m, name) in freq.metrics.iter().enumerate() {
        let mut row = vec![Value::String(name.clone())];
        row.extend(freq.columns.iter().map(|c| num(c.percent[m])));
        t.push(row);
    }
    t
}

pub fn magnitude_table(mag: &MagnitudeReport) -> Table {
    let mut t = Table::new(
        "final/initial value ratios of applied changes",
        &["dataset", "treatment", "metric", "changes", "p25", "p50", "p75", "increases"],
    );
    for e in &mag.entries {
        t.push(vec![
            e.dataset.clone().into(),
            e.treatment.name().into(),
            e.metric.clone().into(),
            e.changes.into(),
            num(e.p25),
            num(e.p50),
            num(e.p75),
            num(e.increases),
        ]);
    }
    t
}

/// Datasets down the side, metrics across; `+`, `-` or blank.
pub fn direction_table(rows: &[(&str, &DirectionTable)], schema: &MetricSchema) -> Table {
    let mut t = Table {
        title: "what-if directions".into(),
        columns: std::iter::once("dataset".to_string())
            .chain(schema.names().iter().cloned())
            .collect(),
        rows: Vec::new(),
        dot_zero: false,
    };
    for (name, d) in rows {
        let mut row = vec![Value::String(name.to_string())];
        row.extend(
            d.signs
                .iter()
                .map(|s| s.map_or(Value::Null, |s| s.symbol().into())),
        );
        t.push(row);
    }
    t
}

pub fn stopping_table(entries: &[StoppingEntry]) -> Table {
    let mut t = Table::new(
        "metrics without historical evidence",
        &["dataset", "treatment", "kept", "deprecated", "kept_metrics"],
    );
    for e in entries {
        t.push(vec![
            e.dataset.clone().into(),
            e.treatment.name().into(),
            e.kept.len().into(),
            e.deprecated.len().into(),
            e.kept.join(" ").into(),
        ]);
    }
    t
}

fn score_cells(s: Option<&OracleScore>) -> [Value; 2] {
    [opt_num(s.map(|s| s.pd)), opt_num(s.map(|s| s.pf))]
}

pub fn oracle_table(outcomes: &[DatasetOutcome]) -> Table {
    let mut t = Table::new(
        "verification oracle",
        &[
            "dataset", "test", "tuned", "n_trees", "max_depth", "min_leaf", "features", "val_pd",
            "val_pf", "default_pd", "default_pf", "test_pd", "test_pf", "usable", "excluded",
        ],
    );
    for o in outcomes {
        let s = &o.oracle;
        let mut row: Vec<Value> = vec![
            o.name.clone().into(),
            o.test_version.clone().into(),
            s.tuned.into(),
            s.config.n_trees.into(),
            s.config.max_depth.into(),
            s.config.min_leaf.into(),
            num(s.config.feature_fraction),
        ];
        row.extend(score_cells(Some(&s.validation)));
        row.extend(score_cells(s.untuned.as_ref()));
        row.extend(score_cells(s.test.as_ref()));
        row.push(s.validation.usable.into());
        row.push(o.excluded.into());
        t.push(row);
    }
    t
}

pub fn threshold_table(set: &ThresholdSet, schema: &MetricSchema) -> Table {
    let mut t = Table::new(
        format!("{} thresholds", set.method),
        &["metric", "method", "threshold", "p_value"],
    );
    for (m, th) in set.thresholds.iter().enumerate() {
        t.push(vec![
            schema.name(m).into(),
            set.method.to_string().into(),
            opt_num(*th),
            opt_num(set.p_values.get(m).copied().flatten()),
        ]);
    }
    t
}

/// `key=value` lines after a provenance block.
pub fn forest_config_kv(config: &ForestConfig, provenance: &Provenance) -> String {
    format!("{}{}", provenance.comment_block(), config.to_kv())
}

#[derive(Serialize)]
struct Bundle<'a> {
    provenance: Value,
    report: &'a ExperimentReport,
}

/// All trials and aggregates as one JSON document.
pub fn json_bundle(report: &ExperimentReport, provenance: &Provenance) -> String {
    let mut s = serde_json::to_string_pretty(&Bundle {
        provenance: provenance.to_json(),
        report,
    })
    .expect("report serializes");
    s.push('\n');
    s
}

/// The trial rows alone, for plotting.
pub fn trial_table(trials: &[TrialResult]) -> Table {
    let mut t = Table::new(
        "trials",
        &["dataset", "treatment", "repeat", "d_plus", "d_minus", "improvement", "planned", "empty_plans"],
    );
    for r in trials {
        t.push(vec![
            r.dataset.clone().into(),
            r.treatment.name().into(),
            r.repeat.into(),
            r.d_plus.into(),
            r.d_minus.into(),
            opt_num(r.improvement),
            r.planned.into(),
            r.empty_plans.into(),
        ]);
    }
    t
}

/// Every table of an experiment, keyed by file stem.
pub fn experiment_tables(report: &ExperimentReport) -> Vec<(&'static str, Table)> {
    let schema = MetricSchema::from_names(report.frequency.metrics.clone());
    let dirs: Vec<(&str, &DirectionTable)> = report
        .datasets
        .iter()
        .filter_map(|d| d.directions.as_ref().map(|t| (d.name.as_str(), t)))
        .collect();
    vec![
        ("oracle", oracle_table(&report.datasets)),
        ("ranks", rank_table(&report.datasets)),
        ("frequency", frequency_table(&report.frequency)),
        ("magnitude", magnitude_table(&report.magnitude)),
        ("directions", direction_table(&dirs, &schema)),
        ("stopping", stopping_table(&report.stopping)),
        ("trials", trial_table(&report.trials)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{ThresholdMethod, ThresholdParams};

    fn small() -> Table {
        let mut t = Table::new("demo", &["name", "value"]);
        t.push(vec!["a".into(), num(0.0)]);
        t.push(vec!["bb".into(), num(12.5)]);
        t.push(vec!["c".into(), Value::Null]);
        t
    }

    #[test]
    fn text_alignment_and_dots() {
        let mut t = small();
        assert_eq!(t.to_text(), "demo\nname  value\na         0\nbb     12.5\nc\n");
        t.dot_zero = true;
        assert!(t.to_text().contains("a         .\n"));
    }

    #[test]
    fn csv_and_json_keep_values() {
        let t = small();
        assert_eq!(t.to_csv(), "name,value\na,0.0\nbb,12.5\nc,\n");
        let v = t.to_json();
        assert_eq!(v["rows"][1]["value"], json!(12.5));
        assert!(v["rows"][2]["value"].is_null());
    }

    #[test]
    fn every_rendering_declares_provenance() {
        let p = Provenance::new().with("seed", 7).with("repeats", 40);
        let t = small();
        for f in [Format::Text, Format::Csv] {
            assert!(t.render(f, &p).starts_with("# seed = 7\n# repeats = 40\n"));
        }
        let v: Value = serde_json::from_str(&t.render(Format::Json, &p)).unwrap();
        assert_eq!(v["provenance"]["seed"], "7");
        assert!(render_all(&[small(), small()], Format::Csv, &p).starts_with("# seed = 7"));
    }

    #[test]
    fn numbers_print_short() {
        assert_eq!(fmt_number(3.0), "3");
        assert_eq!(fmt_number(2.345), "2.35");
        assert_eq!(fmt_number(0.5), "0.5");
    }

    #[test]
    fn thresholds_list_every_metric() {
        let schema = MetricSchema::jureczko();
        let mut thresholds = vec![None; schema.len()];
        thresholds[10] = Some(100.0);
        let set = ThresholdSet {
            method: ThresholdMethod::Alves,
            thresholds,
            p_values: vec![Some(0.01); schema.len()],
            params: ThresholdParams {
                percentile: Some(0.7),
                ..ThresholdParams::default()
            },
        };
        let t = threshold_table(&set, &schema);
        assert_eq!(t.rows.len(), 20);
        assert_eq!(t.rows[10][0], "loc");
        assert_eq!(t.rows[10][2], json!(100.0));
        assert!(t.rows[0][2].is_null());
    }

    #[test]
    fn format_names() {
        assert_eq!("JSON".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }
}
