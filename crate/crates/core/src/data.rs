//! Historical metric/defect tables.
//!
//! Tables follow the Jureczko/PROMISE layout: leading identifier columns,
//! the twenty CK-style class metrics (any order, matched by name), then a
//! defect-count column named `bug` or `defects`.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Metric names in canonical order.
pub const JURECZKO_METRICS: [&str; 20] = [
    "wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca", "ce", "npm", "lcom3", "loc", "dam", "moa",
    "mfa", "cam", "ic", "cbm", "amc", "max_cc", "avg_cc",
];

/// Number of metrics in the schema.
pub const N_METRICS: usize = JURECZKO_METRICS.len();

/// Index of `loc` in [`JURECZKO_METRICS`].
pub const LOC: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSchema {
    names: Vec<String>,
}

impl MetricSchema {
    pub fn jureczko() -> Self {
        Self {
            names: JURECZKO_METRICS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn from_names(names: Vec<String>) -> Self {
        Self { names }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl Default for MetricSchema {
    fn default() -> Self {
        Self::jureczko()
    }
}

/// One class snapshot: identifiers, metric vector, and defect count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleRecord {
    pub module_name: String,
    pub version: String,
    pub metrics: Vec<f64>,
    pub n_defects: u32,
}

impl ModuleRecord {
    pub fn is_defective(&self) -> bool {
        self.n_defects > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub schema: MetricSchema,
    pub rows: Vec<ModuleRecord>,
    /// Distinct versions in order of first appearance.
    pub source_versions: Vec<String>,
}

impl MetricTable {
    pub fn new(schema: MetricSchema, rows: Vec<ModuleRecord>) -> Self {
        let mut source_versions: Vec<String> = Vec::new();
        for row in &rows {
            if !source_versions.contains(&row.version) {
                source_versions.push(row.version.clone());
            }
        }
        Self {
            schema,
            rows,
            source_versions,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_metrics(&self) -> usize {
        self.schema.len()
    }

    pub fn column(&self, metric: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.metrics[metric]).collect()
    }

    pub fn defect_counts(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.n_defects).collect()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(ModuleRecord::is_defective).collect()
    }

    pub fn n_defective(&self) -> usize {
        self.rows.iter().filter(|r| r.is_defective()).count()
    }

    /// `100 · |defective| / |rows|`; zero for an empty table.
    pub fn percent_defective(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        100.0 * self.n_defective() as f64 / self.rows.len() as f64
    }

    pub fn subset(&self, indices: &[usize]) -> MetricTable {
        MetricTable::new(
            self.schema.clone(),
            indices.iter().map(|&i| self.rows[i].clone()).collect(),
        )
    }
}

/// Orders version tags by their dotted numeric components (`2` < `2.5` < `3.0`),
/// falling back to string order for non-numeric parts.
pub fn compare_versions(a: &str, b: &str) -> Ordering {
    let mut left = a.split(['.', '-', '_']);
    let mut right = b.split(['.', '-', '_']);
    loop {
        match (left.next(), right.next()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) => {
                let ord = match (x.parse::<u64>(), y.parse::<u64>()) {
                    (Ok(x), Ok(y)) => x.cmp(&y),
                    _ => x.cmp(y),
                };
                if ord != Ordering::Equal {
                    return ord;
                }
            }
        }
    }
}

fn normalize_header(raw: &str) -> String {
    raw.trim()
        .trim_start_matches(['$', '<', '>', '?', '!'])
        .to_ascii_lowercase()
}

fn version_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match stem.rsplit_once('-') {
        Some((_, v)) => v.to_string(),
        None => stem,
    }
}

pub fn load_table(path: impl AsRef<Path>, schema: &MetricSchema) -> Result<MetricTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_table(file, path, schema)
}

enum Column {
    Identifier,
    Metric(usize),
    Defects,
}

/// Parses a table from any reader; `source` names the input in errors and
/// supplies the version tag when the table has no `version` column.
pub fn read_table<R: Read>(reader: R, source: &Path, schema: &MetricSchema) -> Result<MetricTable> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: source.to_path_buf(),
        source: e,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(normalize_header)
        .collect();

    let mut columns = Vec::with_capacity(headers.len());
    let mut metric_col = vec![None; schema.len()];
    let mut defect_col = None;
    let mut seen_metric = false;
    for (i, h) in headers.iter().enumerate() {
        if let Some(m) = schema.index_of(h) {
            if metric_col[m].is_some() {
                return Err(Error::DuplicateColumn {
                    path: source.to_path_buf(),
                    column: h.clone(),
                });
            }
            metric_col[m] = Some(i);
            seen_metric = true;
            columns.push(Column::Metric(m));
        } else if h == "bug" || h == "defects" {
            if defect_col.is_some() {
                return Err(Error::AmbiguousDefectColumn {
                    path: source.to_path_buf(),
                });
            }
            defect_col = Some(i);
            columns.push(Column::Defects);
        } else if !seen_metric {
            columns.push(Column::Identifier);
        } else {
            return Err(Error::ExtraColumn {
                path: source.to_path_buf(),
                column: h.clone(),
            });
        }
    }
    if let Some(m) = metric_col.iter().position(Option::is_none) {
        return Err(Error::MissingMetric {
            path: source.to_path_buf(),
            metric: schema.name(m).to_string(),
        });
    }
    if defect_col.is_none() {
        return Err(Error::MissingDefectColumn {
            path: source.to_path_buf(),
        });
    }
    let name_col = columns
        .iter()
        .position(|c| matches!(c, Column::Identifier));
    let version_col = headers
        .iter()
        .zip(&columns)
        .position(|(h, c)| h == "version" && matches!(c, Column::Identifier));
    let fallback_version = version_from_path(source);

    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row_no = r + 1;
        let mut metrics = vec![0.0; schema.len()];
        let mut n_defects = 0;
        for (i, column) in columns.iter().enumerate() {
            let cell = record.get(i).unwrap_or("");
            match column {
                Column::Identifier => {}
                Column::Metric(m) => {
                    metrics[*m] = match cell.parse::<f64>() {
                        Ok(v) if v.is_finite() && v >= 0.0 => v,
                        _ => {
                            return Err(Error::BadCell {
                                path: source.to_path_buf(),
                                row: row_no,
                                column: headers[i].clone(),
                                value: cell.to_string(),
                            })
                        }
                    };
                }
                Column::Defects => {
                    n_defects = parse_defects(cell).ok_or_else(|| Error::BadDefectCount {
                        path: source.to_path_buf(),
                        row: row_no,
                        value: cell.to_string(),
                    })?;
                }
            }
        }
        let module_name = match name_col {
            Some(c) => record.get(c).unwrap_or("").to_string(),
            None => format!("row{row_no}"),
        };
        let version = match version_col {
            Some(c) => record.get(c).unwrap_or("").to_string(),
            None => fallback_version.clone(),
        };
        rows.push(ModuleRecord {
            module_name,
            version,
            metrics,
            n_defects,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyTable);
    }
    Ok(MetricTable::new(schema.clone(), rows))
}

fn parse_defects(cell: &str) -> Option<u32> {
    if let Ok(n) = cell.parse::<u32>() {
        return Some(n);
    }
    match cell.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Some(v as u32),
        _ => None,
    }
}

/// Writes the table in the same CSV dialect `read_table` accepts.
pub fn write_table<W: Write>(table: &MetricTable, writer: W) -> Result<()> {
    let to_err = |e: csv::Error| Error::Csv {
        path: PathBuf::from("<output>"),
        source: e,
    };
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["name".to_string(), "version".to_string()];
    header.extend(table.schema.names().iter().cloned());
    header.push("bug".into());
    w.write_record(&header).map_err(to_err)?;
    for row in &table.rows {
        let mut rec = vec![row.module_name.clone(), row.version.clone()];
        // `{}` on f64 prints the shortest string that parses back to the same value.
        rec.extend(row.metrics.iter().map(|v| format!("{v}")));
        rec.push(row.n_defects.to_string());
        w.write_record(&rec).map_err(to_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<output>"),
        source,
    })?;
    Ok(())
}

/// Loads every `<project>-<version>.csv` in `dir`, sorted by version.
pub fn load_project(
    dir: impl AsRef<Path>,
    project: &str,
    schema: &MetricSchema,
) -> Result<Vec<MetricTable>> {
    let dir = dir.as_ref();
    let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let prefix = format!("{project}-");
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "csv")
                && p.file_name()
                    .is_some_and(|n| n.to_string_lossy().starts_with(&prefix))
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::Io {
            path: dir.join(format!("{prefix}*.csv")),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no matching files"),
        });
    }
    paths.sort_by(|a, b| compare_versions(&version_from_path(a), &version_from_path(b)));
    paths.iter().map(|p| load_table(p, schema)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTestSplit {
    pub train: MetricTable,
    pub test: MetricTable,
}

/// Test on `test_version`; train on every row from a strictly earlier version.
pub fn split_by_versions(tables: &[MetricTable], test_version: &str) -> Result<TrainTestSplit> {
    let holders = tables
        .iter()
        .filter(|t| t.source_versions.iter().any(|v| v == test_version))
        .count();
    match holders {
        0 => return Err(Error::VersionNotFound(test_version.to_string())),
        1 => {}
        _ => return Err(Error::DuplicateVersion(test_version.to_string())),
    }
    let schema = tables[0].schema.clone();
    let mut ordered: Vec<&MetricTable> = tables.iter().collect();
    ordered.sort_by(|a, b| {
        compare_versions(
            a.source_versions.first().map_or("", String::as_str),
            b.source_versions.first().map_or("", String::as_str),
        )
    });
    let mut train = Vec::new();
    let mut test = Vec::new();
    for table in ordered {
        for row in &table.rows {
            match compare_versions(&row.version, test_version) {
                Ordering::Less => train.push(row.clone()),
                Ordering::Equal if row.version == test_version => test.push(row.clone()),
                _ => {}
            }
        }
    }
    if train.is_empty() {
        return Err(Error::NoTrainingData(test_version.to_string()));
    }
    Ok(TrainTestSplit {
        train: MetricTable::new(schema.clone(), train),
        test: MetricTable::new(schema, test),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub metric: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableSummary {
    pub rows: usize,
    pub percent_defective: f64,
    pub metrics: Vec<MetricSummary>,
}

pub fn summarize(table: &MetricTable) -> Result<TableSummary> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let metrics = (0..table.n_metrics())
        .map(|m| {
            let col = table.column(m);
            let (mean, std) = stats::mean_std(&col);
            MetricSummary {
                metric: table.schema.name(m).to_string(),
                min: col.iter().copied().fold(f64::INFINITY, f64::min),
                max: col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean,
                std,
            }
        })
        .collect();
    Ok(TableSummary {
        rows: table.len(),
        percent_defective: table.percent_defective(),
        metrics,
    })
}

/// Min-max scaling fitted on a reference table; distances between metric
/// vectors are Euclidean over the scaled values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl MinMax {
    pub fn fit(table: &MetricTable) -> Self {
        Self::fit_rows(table.rows.iter().map(|r| r.metrics.as_slice()), table.n_metrics())
    }

    pub fn fit_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>, width: usize) -> Self {
        let mut lo = vec![f64::INFINITY; width];
        let mut hi = vec![f64::NEG_INFINITY; width];
        for row in rows {
            for (m, &v) in row.iter().enumerate() {
                lo[m] = lo[m].min(v);
                hi[m] = hi[m].max(v);
            }
        }
        for m in 0..width {
            if !lo[m].is_finite() {
                lo[m] = 0.0;
                hi[m] = 0.0;
            }
        }
        Self { lo, hi }
    }

    pub fn scale(&self, metric: usize, value: f64) -> f64 {
        let span = self.hi[metric] - self.lo[metric];
        if span <= 0.0 {
            0.0
        } else {
            (value - self.lo[metric]) / span
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(m, (&x, &y))| {
                let d = self.scale(m, x) - self.scale(m, y);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}
