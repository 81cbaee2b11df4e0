//! Generator for tables shaped like the PROMISE CK-metric data. Used for
//! tests, smoke runs and timing when the real projects are not at hand.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};

use crate::data::{write_table, MetricSchema, MetricTable, ModuleRecord};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectShape {
    pub name: String,
    /// `(version, rows, percent defective)` in release order; the last
    /// entry is the test version.
    pub versions: Vec<(String, usize, f64)>,
}

impl ProjectShape {
    pub fn test_version(&self) -> &str {
        &self.versions.last().expect("shape has versions").0
    }
}

fn shape(name: &str, train: &[&str], train_rows: usize, train_pct: f64, test: &str, test_rows: usize, test_pct: f64) -> ProjectShape {
    let per = train_rows / train.len();
    let mut versions: Vec<(String, usize, f64)> = train
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let rows = if i + 1 == train.len() { train_rows - per * (train.len() - 1) } else { per };
            (v.to_string(), rows, train_pct)
        })
        .collect();
    versions.push((test.to_string(), test_rows, test_pct));
    ProjectShape {
        name: name.into(),
        versions,
    }
}

/// Row counts, versions and test defect rates of the five retained
/// projects. Training defect rates are not published per version, so a
/// plausible rate is assumed for each.
pub fn retained_shapes() -> Vec<ProjectShape> {
    vec![
        shape("jedit", &["3.2", "4.0", "4.1", "4.2"], 1257, 20.0, "4.3", 492, 2.0),
        shape("ivy", &["1.1", "1.4"], 352, 25.0, "2.0", 352, 11.0),
        shape("ant", &["1.3", "1.4", "1.5", "1.6"], 947, 20.0, "1.7", 745, 22.0),
        shape("lucene", &["2.0", "2.2"], 442, 50.0, "2.4", 340, 59.0),
        shape("poi", &["1.5", "2.0", "2.5"], 936, 45.0, "3.0", 442, 64.0),
    ]
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn module(rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let size = LogNormal::new(2.0, 0.8).unwrap().sample(rng);
    let jitter = |rng: &mut ChaCha8Rng, s: f64| LogNormal::new(0.0, s).unwrap().sample(rng);
    let wmc = (size * jitter(rng, 0.3)).round().max(1.0);
    let dit = f64::from(rng.random_range(1..=5u8));
    let noc = if rng.random::<f64>() < 0.8 { 0.0 } else { f64::from(rng.random_range(1..=6u8)) };
    let cbo = (0.8 * size * jitter(rng, 0.5)).round();
    let rfc = (wmc * 2.5 * jitter(rng, 0.4)).round().max(wmc);
    let lcom = (wmc * (wmc - 1.0) / 2.0 * rng.random::<f64>()).round();
    let ca = (0.4 * size * jitter(rng, 0.9)).round();
    let ce = (cbo - ca).max(0.0);
    let npm = (wmc * rng.random_range(0.4..1.0)).round();
    let lcom3 = rng.random_range(0.0..2.0);
    let loc = (wmc * 18.0 * jitter(rng, 0.5)).round().max(3.0);
    let dam = if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random_range(0.5..=1.0) };
    let moa = f64::from(Poisson::new(0.6).unwrap().sample(rng) as u32);
    let mfa = if dit > 1.0 { rng.random_range(0.0..1.0) } else { 0.0 };
    let cam = rng.random_range(0.1..0.9) / (1.0 + wmc / 20.0);
    let ic = if dit > 1.0 { f64::from(rng.random_range(0..=2u8)) } else { 0.0 };
    let cbm = ic * f64::from(rng.random_range(0..=2u8));
    let amc = loc / wmc;
    let max_cc = (1.0 + amc / 8.0 * jitter(rng, 0.5)).round();
    let avg_cc = (1.0 + (max_cc - 1.0) * rng.random::<f64>() * 0.6).max(1.0);
    let metrics = vec![
        wmc, dit, noc, cbo, rfc, lcom, ca, ce, npm, lcom3, loc, dam, moa, mfa, cam, ic, cbm, amc,
        max_cc, avg_cc,
    ];
    // Defect risk driven by size, response set and coupling.
    let risk = 1.1 * loc.ln() + 0.9 * (rfc + 1.0).ln() + 0.5 * (cbo + 1.0).ln() + 0.6 * rng.random::<f64>();
    (metrics, risk)
}

fn version_table(name: &str, version: &str, rows: usize, percent: f64, seed: u64) -> MetricTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modules: Vec<(Vec<f64>, f64)> = (0..rows).map(|_| module(&mut rng)).collect();
    // Intercept chosen by bisection so the expected defect rate matches.
    let target = percent / 100.0;
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let rate = modules.iter().map(|(_, r)| sigmoid(mid + 1.5 * (r - 12.0))).sum::<f64>() / rows.max(1) as f64;
        if rate < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let records = modules
        .into_iter()
        .enumerate()
        .map(|(i, (metrics, risk))| {
            let p = sigmoid(lo + 1.5 * (risk - 12.0));
            let n_defects = if rng.random::<f64>() < p {
                1 + Poisson::new(0.7).unwrap().sample(&mut rng) as u32
            } else {
                0
            };
            ModuleRecord {
                module_name: format!("org.{name}.C{i}"),
                version: version.to_string(),
                metrics,
                n_defects,
            }
        })
        .collect();
    MetricTable::new(MetricSchema::jureczko(), records)
}

/// One table per version, each from its own seeded stream.
pub fn generate_project(shape: &ProjectShape, master_seed: u64) -> Vec<MetricTable> {
    shape
        .versions
        .iter()
        .map(|(version, rows, pct)| {
            version_table(
                &shape.name,
                version,
                *rows,
                *pct,
                seed::derive(master_seed, &[&shape.name, version]),
            )
        })
        .collect()
}

/// Writes `<name>-<version>.csv` for every table.
pub fn write_project(dir: &Path, name: &str, tables: &[MetricTable]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for t in tables {
        let version = t.source_versions.first().cloned().unwrap_or_default();
        let path = dir.join(format!("{name}-{version}.csv"));
        let file = std::fs::File::create(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        write_table(t, std::io::BufWriter::new(file))?;
    }
    Ok(())
}
