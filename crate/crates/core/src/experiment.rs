//! Planning experiments: build each planner on the training versions,
//! apply its plans to the modules the oracle flags in the test version,
//! and count how many the oracle still flags.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    alves_thresholds, cd_plan, erni_thresholds, shatnawi_thresholds, threshold_plan, where_cluster,
    Centroids, ThresholdSet,
};
use crate::data::{MetricTable, ModuleRecord, TrainTestSplit};
use crate::discretize::{discretize_table, SplitRules};
use crate::error::{Error, Result};
use crate::oracle::{build_verified_oracle, score, Forest, ForestConfig, OracleOptions, OracleScore, VerifiedOracle};
use crate::plan::{Plan, Target};
use crate::seed;
use crate::stats::{self, Bootstrap, RankTable, ScottKnott, TreatmentSamples};
use crate::xtree::{build_tree, whatif_directions, DirectionTable, TreeConfig, WhatIf, XTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Treatment {
    XTree,
    Cd,
    Shatnawi,
    Alves,
    Erni,
}

impl Treatment {
    pub const ALL: [Treatment; 5] = [
        Treatment::XTree,
        Treatment::Cd,
        Treatment::Shatnawi,
        Treatment::Alves,
        Treatment::Erni,
    ];

    /// Planners compared by default. `erni` is available but left out.
    pub const DEFAULT: [Treatment; 4] = [
        Treatment::XTree,
        Treatment::Cd,
        Treatment::Alves,
        Treatment::Shatnawi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Treatment::XTree => "xtree",
            Treatment::Cd => "cd",
            Treatment::Shatnawi => "shatnawi",
            Treatment::Alves => "alves",
            Treatment::Erni => "erni",
        }
    }

    /// Only CD draws random numbers while planning.
    pub fn is_stochastic(self) -> bool {
        self == Treatment::Cd
    }
}

impl fmt::Display for Treatment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Treatment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Treatment::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown treatment '{s}' (expected xtree, cd, shatnawi, alves or erni)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    pub p0: f64,
    pub p1: f64,
    pub percentile: f64,
    pub tree: TreeConfig,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            p0: 0.05,
            p1: 0.05,
            percentile: 0.70,
            tree: TreeConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Planner {
    XTree(Box<XTree>),
    Cd(Centroids),
    Threshold(ThresholdSet),
}

impl Planner {
    pub fn plan(&self, module: &ModuleRecord) -> Plan {
        match self {
            Planner::XTree(tree) => tree.plan_for_module(module),
            Planner::Cd(centroids) => cd_plan(centroids, module),
            Planner::Threshold(set) => threshold_plan(set, module),
        }
    }
}

/// Builds the tree with the root discretized under the same leaf-size floor
/// the tree applies below it.
pub fn xtree_planner(train: &MetricTable, params: &PlannerParams) -> Result<XTree> {
    let rules = SplitRules {
        min_rows: params.tree.rules.min_rows.max(params.tree.min_leaf_for(train.len())),
        ..params.tree.rules
    };
    let disc = discretize_table(train, &rules)?;
    build_tree(train, &disc, &params.tree)
}

pub fn build_planner(
    treatment: Treatment,
    train: &MetricTable,
    params: &PlannerParams,
    seed: u64,
) -> Result<Planner> {
    Ok(match treatment {
        Treatment::XTree => Planner::XTree(Box::new(xtree_planner(train, params)?)),
        Treatment::Cd => Planner::Cd(where_cluster(train, seed)?),
        Treatment::Shatnawi => Planner::Threshold(shatnawi_thresholds(train, params.p0, params.p1)?),
        Treatment::Alves => Planner::Threshold(alves_thresholds(train, params.percentile)?),
        Treatment::Erni => Planner::Threshold(erni_thresholds(train)?),
    })
}

fn apply_with<R: Rng>(module: &ModuleRecord, plan: &Plan, rng: &mut R) -> Result<ModuleRecord> {
    let mut out = module.clone();
    for change in &plan.changes {
        if change.metric >= out.metrics.len() {
            return Err(Error::InvalidInput(format!(
                "plan names metric {} but modules have {}",
                change.metric,
                out.metrics.len()
            )));
        }
        out.metrics[change.metric] = match change.target {
            Target::Value { value } => value,
            Target::Interval { low, high } => {
                if !(low < high) {
                    return Err(Error::InvalidInput(format!("empty interval ({low}, {high}]")));
                }
                // 1 − U(0,1] lies in (0, 1], keeping the draw inside (low, high].
                let u = 1.0 - rng.random::<f64>();
                (low + u * (high - low)).min(high)
            }
        };
    }
    Ok(out)
}

/// A fresh record with the plan's changes made. Interval targets are met by
/// a uniform draw from `(low, high]`; value targets are set exactly.
pub fn apply_plan(module: &ModuleRecord, plan: &Plan, seed: u64) -> Result<ModuleRecord> {
    apply_with(module, plan, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn improvement(d_plus: usize, d_minus: usize) -> Option<f64> {
    (d_plus > 0).then(|| 100.0 * (d_plus as f64 - d_minus as f64) / d_plus as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub dataset: String,
    pub treatment: Treatment,
    pub repeat: usize,
    pub seed: u64,
    pub d_plus: usize,
    pub d_minus: usize,
    /// `None` when the oracle flagged nothing to begin with.
    pub improvement: Option<f64>,
    pub planned: usize,
    pub empty_plans: usize,
    /// Metrics named by at least one plan, in schema order.
    pub mentioned: Vec<usize>,
    /// `(metric, final / initial)` for every applied change with both
    /// values nonzero.
    #[serde(skip)]
    pub ratios: Vec<(usize, f64)>,
}

/// Plans every module the oracle flags, applies the plans, and re-counts.
pub fn trial_with_planner(
    test: &MetricTable,
    flagged: &[usize],
    planner: &Planner,
    oracle: &Forest,
    seed: u64,
) -> Result<(usize, usize, Vec<usize>, Vec<(usize, f64)>)> {
    let mut changed: Vec<ModuleRecord> = test.rows.clone();
    let mut mentioned = vec![false; test.n_metrics()];
    let mut ratios = Vec::new();
    let mut empty = 0;
    for (k, &i) in flagged.iter().enumerate() {
        let module = &test.rows[i];
        let plan = planner.plan(module);
        if plan.is_empty() {
            empty += 1;
            continue;
        }
        let after = apply_plan(module, &plan, seed::derive_index(seed, k as u64))?;
        for c in &plan.changes {
            mentioned[c.metric] = true;
            let (before, now) = (module.metrics[c.metric], after.metrics[c.metric]);
            if before != 0.0 && now != 0.0 {
                ratios.push((c.metric, now / before));
            }
        }
        changed[i] = after;
    }
    let d_minus = changed.iter().filter(|r| oracle.predict(&r.metrics)).count();
    let mentioned = (0..mentioned.len()).filter(|&m| mentioned[m]).collect();
    Ok((d_minus, empty, mentioned, ratios))
}

pub fn flagged_modules(oracle: &Forest, test: &MetricTable) -> Vec<usize> {
    (0..test.len())
        .filter(|&i| oracle.predict(&test.rows[i].metrics))
        .collect()
}

/// One repeat of one treatment on one dataset.
pub fn run_trial(
    dataset: &str,
    split: &TrainTestSplit,
    treatment: Treatment,
    params: &PlannerParams,
    oracle: &Forest,
    repeat: usize,
    seed: u64,
) -> Result<TrialResult> {
    let planner = build_planner(treatment, &split.train, params, seed::derive(seed, &["plan"]))?;
    let flagged = flagged_modules(oracle, &split.test);
    finish_trial(dataset, &split.test, &flagged, treatment, &planner, oracle, repeat, seed)
}

#[allow(clippy::too_many_arguments)]
fn finish_trial(
    dataset: &str,
    test: &MetricTable,
    flagged: &[usize],
    treatment: Treatment,
    planner: &Planner,
    oracle: &Forest,
    repeat: usize,
    seed: u64,
) -> Result<TrialResult> {
    let (d_minus, empty_plans, mentioned, ratios) =
        trial_with_planner(test, flagged, planner, oracle, seed::derive(seed, &["apply"]))?;
    let d_plus = flagged.len();
    Ok(TrialResult {
        dataset: dataset.to_string(),
        treatment,
        repeat,
        seed,
        d_plus,
        d_minus,
        improvement: improvement(d_plus, d_minus),
        planned: d_plus - empty_plans,
        empty_plans,
        mentioned,
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub test_version: String,
    pub split: TrainTestSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub treatments: Vec<Treatment>,
    pub repeats: usize,
    pub master_seed: u64,
    pub planner: PlannerParams,
    pub oracle: OracleOptions,
    pub whatif: WhatIf,
    pub confidence: f64,
    pub a12_floor: f64,
    /// Percent of repeats below which a metric is deprecated.
    pub mention_floor: f64,
    /// Drop datasets whose oracle fails the gate.
    pub require_usable: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            treatments: Treatment::DEFAULT.to_vec(),
            repeats: 40,
            master_seed: 1,
            planner: PlannerParams::default(),
            oracle: OracleOptions::default(),
            whatif: WhatIf::default(),
            confidence: 0.99,
            a12_floor: 0.6,
            mention_floor: 33.0,
            require_usable: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub config: ForestConfig,
    pub tuned: bool,
    pub validation: OracleScore,
    pub untuned: Option<OracleScore>,
    /// Score on the test version, when it holds both classes.
    pub test: Option<OracleScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetOutcome {
    pub name: String,
    pub test_version: String,
    pub train_rows: usize,
    pub test_rows: usize,
    pub test_percent_defective: f64,
    pub oracle: OracleSummary,
    pub excluded: bool,
    pub d_plus: usize,
    pub ranks: Option<RankTable>,
    pub undefined_trials: usize,
    pub directions: Option<DirectionTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyColumn {
    pub dataset: String,
    pub treatment: Treatment,
    pub repeats: usize,
    /// Per schema metric: percent of repeats whose plans named it.
    pub percent: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub metrics: Vec<String>,
    pub columns: Vec<FrequencyColumn>,
}

impl FrequencyReport {
    pub fn column(&self, dataset: &str, treatment: Treatment) -> Option<&FrequencyColumn> {
        self.columns
            .iter()
            .find(|c| c.dataset == dataset && c.treatment == treatment)
    }

    /// Metrics named in more than `floor` percent of repeats.
    pub fn count_above(&self, dataset: &str, treatment: Treatment, floor: f64) -> Option<usize> {
        self.column(dataset, treatment)
            .map(|c| c.percent.iter().filter(|&&p| p > floor).count())
    }
}

pub fn frequency_report(metrics: &[String], trials: &[TrialResult]) -> FrequencyReport {
    let mut columns: Vec<FrequencyColumn> = Vec::new();
    let mut counts: Vec<Vec<usize>> = Vec::new();
    for t in trials {
        let at = match columns
            .iter()
            .position(|c| c.dataset == t.dataset && c.treatment == t.treatment)
        {
            Some(i) => i,
            None => {
                columns.push(FrequencyColumn {
                    dataset: t.dataset.clone(),
                    treatment: t.treatment,
                    repeats: 0,
                    percent: vec![0.0; metrics.len()],
                });
                counts.push(vec![0; metrics.len()]);
                columns.len() - 1
            }
        };
        columns[at].repeats += 1;
        for &m in &t.mentioned {
            counts[at][m] += 1;
        }
    }
    for (col, count) in columns.iter_mut().zip(&counts) {
        for (p, &c) in col.percent.iter_mut().zip(count) {
            *p = 100.0 * c as f64 / col.repeats as f64;
        }
    }
    FrequencyReport {
        metrics: metrics.to_vec(),
        columns,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeEntry {
    pub dataset: String,
    pub treatment: Treatment,
    pub metric: String,
    pub changes: usize,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    /// Share of changes that raised the metric.
    pub increases: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeReport {
    pub entries: Vec<MagnitudeEntry>,
}

pub fn magnitude_report(metrics: &[String], trials: &[TrialResult]) -> MagnitudeReport {
    let mut keys: Vec<(String, Treatment)> = Vec::new();
    for t in trials {
        if !keys.iter().any(|(d, tr)| *d == t.dataset && *tr == t.treatment) {
            keys.push((t.dataset.clone(), t.treatment));
        }
    }
    let mut entries = Vec::new();
    for (dataset, treatment) in keys {
        let mut per_metric: Vec<Vec<f64>> = vec![Vec::new(); metrics.len()];
        for t in trials
            .iter()
            .filter(|t| t.dataset == dataset && t.treatment == treatment)
        {
            for &(m, r) in &t.ratios {
                per_metric[m].push(r);
            }
        }
        for (m, mut ratios) in per_metric.into_iter().enumerate() {
            if ratios.is_empty() {
                continue;
            }
            ratios.sort_by(f64::total_cmp);
            let ups = ratios.iter().filter(|&&r| r > 1.0).count();
            entries.push(MagnitudeEntry {
                dataset: dataset.clone(),
                treatment,
                metric: metrics[m].clone(),
                changes: ratios.len(),
                p25: stats::percentile_sorted(&ratios, 0.25),
                p50: stats::percentile_sorted(&ratios, 0.50),
                p75: stats::percentile_sorted(&ratios, 0.75),
                increases: ups as f64 / ratios.len() as f64,
            });
        }
    }
    MagnitudeReport { entries }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingEntry {
    pub dataset: String,
    pub treatment: Treatment,
    pub kept: Vec<String>,
    pub deprecated: Vec<String>,
}

/// Metrics mentioned in fewer than `mention_floor` percent of repeats, or
/// never, are deprecated.
pub fn stopping_report(freq: &FrequencyReport, treatment: Treatment, mention_floor: f64) -> Vec<StoppingEntry> {
    freq.columns
        .iter()
        .filter(|c| c.treatment == treatment)
        .map(|c| {
            let (mut kept, mut deprecated) = (Vec::new(), Vec::new());
            for (name, &p) in freq.metrics.iter().zip(&c.percent) {
                if p == 0.0 || p < mention_floor {
                    deprecated.push(name.clone());
                } else {
                    kept.push(name.clone());
                }
            }
            StoppingEntry {
                dataset: c.dataset.clone(),
                treatment,
                kept,
                deprecated,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub datasets: Vec<DatasetOutcome>,
    pub trials: Vec<TrialResult>,
    pub frequency: FrequencyReport,
    pub magnitude: MagnitudeReport,
    pub stopping: Vec<StoppingEntry>,
}

impl ExperimentReport {
    pub fn dataset(&self, name: &str) -> Option<&DatasetOutcome> {
        self.datasets.iter().find(|d| d.name == name)
    }

    pub fn improvements(&self, dataset: &str, treatment: Treatment) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|t| t.dataset == dataset && t.treatment == treatment)
            .filter_map(|t| t.improvement)
            .collect()
    }
}

/// Seed stream for everything done on one dataset.
pub fn dataset_seed(master_seed: u64, dataset: &str) -> u64 {
    seed::derive(master_seed, &[dataset])
}

/// Builds and scores the dataset's oracle. The outcome is marked excluded
/// when the oracle fails the gate and `require_usable` is set; no trials
/// have run yet.
pub fn dataset_oracle(data: &Dataset, config: &ExperimentConfig) -> Result<(VerifiedOracle, DatasetOutcome)> {
    let master = dataset_seed(config.master_seed, &data.name);
    let train = &data.split.train;
    let test = &data.split.test;
    let oracle = build_verified_oracle(train, &config.oracle, seed::derive(master, &["oracle"]))?;
    let test_score = score(&oracle.forest, test, &config.oracle.gate).ok();
    let outcome = DatasetOutcome {
        name: data.name.clone(),
        test_version: data.test_version.clone(),
        train_rows: train.len(),
        test_rows: test.len(),
        test_percent_defective: test.percent_defective(),
        oracle: OracleSummary {
            config: oracle.config,
            tuned: oracle.tuned,
            validation: oracle.validation,
            untuned: oracle.untuned,
            test: test_score,
        },
        excluded: config.require_usable && !oracle.usable(),
        d_plus: 0,
        ranks: None,
        undefined_trials: 0,
        directions: None,
    };
    Ok((oracle, outcome))
}

/// Seed for the what-if study of one dataset.
pub fn whatif_seed(master_seed: u64, dataset: &str) -> u64 {
    seed::derive(dataset_seed(master_seed, dataset), &["whatif"])
}

fn run_dataset(
    data: &Dataset,
    config: &ExperimentConfig,
) -> Result<(DatasetOutcome, Vec<TrialResult>)> {
    let master = dataset_seed(config.master_seed, &data.name);
    let train = &data.split.train;
    let test = &data.split.test;
    let (oracle, mut outcome) = dataset_oracle(data, config)?;
    if outcome.excluded {
        return Ok((outcome, Vec::new()));
    }

    let flagged = flagged_modules(&oracle.forest, test);
    outcome.d_plus = flagged.len();
    let tree = xtree_planner(train, &config.planner)?;
    outcome.directions = whatif_directions(
        &tree,
        &WhatIf {
            seed: whatif_seed(config.master_seed, &data.name),
            ..config.whatif
        },
    )
    .ok();

    let mut trials = Vec::new();
    for &treatment in &config.treatments {
        let fixed = if treatment.is_stochastic() {
            None
        } else if treatment == Treatment::XTree {
            Some(Planner::XTree(Box::new(tree.clone())))
        } else {
            Some(build_planner(treatment, train, &config.planner, 0)?)
        };
        let results: Vec<Result<TrialResult>> = (0..config.repeats)
            .into_par_iter()
            .map(|repeat| {
                let s = seed::derive(master, &[treatment.name(), &repeat.to_string()]);
                let planner = match &fixed {
                    Some(p) => p.clone(),
                    None => build_planner(treatment, train, &config.planner, seed::derive(s, &["plan"]))?,
                };
                finish_trial(&data.name, test, &flagged, treatment, &planner, &oracle.forest, repeat, s)
            })
            .collect();
        for r in results {
            trials.push(r?);
        }
    }

    outcome.undefined_trials = trials.iter().filter(|t| t.improvement.is_none()).count();
    let samples: Vec<TreatmentSamples> = config
        .treatments
        .iter()
        .map(|&tr| {
            TreatmentSamples::new(
                tr.name(),
                trials
                    .iter()
                    .filter(|t| t.treatment == tr)
                    .filter_map(|t| t.improvement)
                    .collect(),
            )
        })
        .collect();
    if samples.iter().any(|s| !s.values.is_empty()) {
        let sk = ScottKnott {
            bootstrap: Bootstrap {
                confidence: config.confidence,
                ..Bootstrap::default()
            },
            a12_floor: config.a12_floor,
            seed: seed::derive(master, &["scott-knott"]),
        };
        outcome.ranks = Some(sk.rank(&samples));
    }
    Ok((outcome, trials))
}

pub fn run_experiment(datasets: &[Dataset], config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.repeats == 0 {
        return Err(Error::InvalidInput("repeats must be at least 1".into()));
    }
    if config.treatments.is_empty() {
        return Err(Error::InvalidInput("no treatments selected".into()));
    }
    let mut outcomes = Vec::new();
    let mut trials = Vec::new();
    for data in datasets {
        let (outcome, t) = run_dataset(data, config)?;
        outcomes.push(outcome);
        trials.extend(t);
    }
    if outcomes.iter().all(|o| o.excluded) {
        return Err(Error::NoUsableDatasets);
    }
    let metrics = datasets
        .first()
        .map(|d| d.split.train.schema.names().to_vec())
        .unwrap_or_default();
    let frequency = frequency_report(&metrics, &trials);
    let magnitude = magnitude_report(&metrics, &trials);
    let stopping = stopping_report(&frequency, Treatment::XTree, config.mention_floor);
    Ok(ExperimentReport {
        config: config.clone(),
        datasets: outcomes,
        trials,
        frequency,
        magnitude,
        stopping,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MetricSchema, LOC, N_METRICS};
    use crate::plan::{Change, Direction};

    fn module(loc: f64) -> ModuleRecord {
        let mut metrics = vec![1.0; N_METRICS];
        metrics[LOC] = loc;
        ModuleRecord {
            module_name: "m".into(),
            version: "1".into(),
            metrics,
            n_defects: 1,
        }
    }

    #[test]
    fn apply_empty_plan_is_identity() {
        let m = module(500.0);
        assert_eq!(apply_plan(&m, &Plan::empty(), 3).unwrap(), m);
    }

    #[test]
    fn apply_cap_and_interval() {
        let m = module(500.0);
        let cap = Plan {
            changes: vec![Change::new(LOC, Target::Value { value: 100.0 }, 500.0)],
            ..Plan::default()
        };
        let after = apply_plan(&m, &cap, 1).unwrap();
        assert_eq!(after.metrics[LOC], 100.0);
        assert_eq!(after.n_defects, m.n_defects);
        assert_eq!(after.metrics[..LOC], m.metrics[..LOC]);

        let interval = Plan {
            changes: vec![Change::new(0, Target::Interval { low: 10.0, high: 20.0 }, 1.0)],
            ..Plan::default()
        };
        for s in 0..500 {
            let v = apply_plan(&m, &interval, s).unwrap().metrics[0];
            assert!(v > 10.0 && v <= 20.0, "{v}");
        }
        let bad = Plan {
            changes: vec![Change {
                metric: 0,
                target: Target::Interval { low: 5.0, high: 5.0 },
                direction: Direction::Either,
            }],
            ..Plan::default()
        };
        assert!(apply_plan(&m, &bad, 1).is_err());
    }

    #[test]
    fn improvement_arithmetic() {
        assert_eq!(improvement(100, 44), Some(56.0));
        assert_eq!(improvement(7, 0), Some(100.0));
        assert_eq!(improvement(7, 7), Some(0.0));
        assert_eq!(improvement(0, 0), None);
    }

    #[test]
    fn treatment_names_round_trip() {
        for t in Treatment::ALL {
            assert_eq!(t.name().parse::<Treatment>().unwrap(), t);
        }
        assert_eq!("XTREE".parse::<Treatment>().unwrap(), Treatment::XTree);
        assert!("bogus".parse::<Treatment>().is_err());
    }

    fn trial(dataset: &str, treatment: Treatment, mentioned: Vec<usize>) -> TrialResult {
        TrialResult {
            dataset: dataset.into(),
            treatment,
            repeat: 0,
            seed: 0,
            d_plus: 1,
            d_minus: 0,
            improvement: Some(100.0),
            planned: 1,
            empty_plans: 0,
            mentioned,
            ratios: vec![(LOC, 0.5), (LOC, 2.0), (LOC, 0.25), (0, 3.0)],
        }
    }

    #[test]
    fn frequency_and_stopping() {
        let names = MetricSchema::jureczko().names().to_vec();
        let trials = vec![
            trial("ant", Treatment::XTree, vec![LOC, 4]),
            trial("ant", Treatment::XTree, vec![LOC]),
            trial("ant", Treatment::XTree, vec![LOC]),
            trial("ant", Treatment::Cd, vec![]),
        ];
        let f = frequency_report(&names, &trials);
        let x = f.column("ant", Treatment::XTree).unwrap();
        assert_eq!(x.repeats, 3);
        assert_eq!(x.percent[LOC], 100.0);
        assert!((x.percent[4] - 100.0 / 3.0).abs() < 1e-9);
        assert_eq!(f.count_above("ant", Treatment::XTree, 33.0), Some(2));
        assert_eq!(f.count_above("ant", Treatment::Cd, 33.0), Some(0));

        let s = stopping_report(&f, Treatment::XTree, 33.0);
        assert_eq!(s[0].kept, vec!["rfc".to_string(), "loc".to_string()]);
        assert_eq!(s[0].deprecated.len(), 18);
        let strict = stopping_report(&f, Treatment::XTree, 50.0);
        assert_eq!(strict[0].kept, vec!["loc".to_string()]);
        let none = stopping_report(&f, Treatment::XTree, 0.0);
        assert_eq!(none[0].deprecated.len(), 18);

        let cd_only = frequency_report(&names, &trials[3..]);
        let all = stopping_report(&cd_only, Treatment::Cd, 33.0);
        assert_eq!(all[0].deprecated.len(), 20);
    }

    #[test]
    fn magnitude_percentiles() {
        let names = MetricSchema::jureczko().names().to_vec();
        let m = magnitude_report(&names, &[trial("ant", Treatment::XTree, vec![LOC])]);
        let loc = m.entries.iter().find(|e| e.metric == "loc").unwrap();
        assert_eq!(loc.changes, 3);
        assert_eq!(loc.p50, 0.5);
        assert!((loc.increases - 1.0 / 3.0).abs() < 1e-12);
        let wmc = m.entries.iter().find(|e| e.metric == "wmc").unwrap();
        assert!(wmc.p50 > 1.0);
    }
}
