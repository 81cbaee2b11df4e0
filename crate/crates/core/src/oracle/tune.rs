use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::de::{self, DeConfig, Param};
use super::forest::fit_forest;
use super::smote::{smote, DEFAULT_K};
use super::{score, ForestBounds, ForestConfig, Gate, OracleScore};
use crate::data::MetricTable;
use crate::error::{Error, Result};
use crate::seed;

/// Rows needed in each class before a table is split for tuning.
pub const MIN_ROWS_PER_CLASS: usize = 20;

/// Stratified halves `(fit, validation)`: each class is shuffled and its
/// first half goes to `fit`.
pub fn stratified_halves(table: &MetricTable, seed: u64) -> Result<(MetricTable, MetricTable)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) =
        (0..table.len()).partition(|&i| table.rows[i].is_defective());
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::SingleClass("stratified split"));
    }
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let (pf, pv) = pos.split_at(pos.len() / 2);
    let (nf, nv) = neg.split_at(neg.len() / 2);
    let mut fit: Vec<usize> = pf.iter().chain(nf).copied().collect();
    let mut val: Vec<usize> = pv.iter().chain(nv).copied().collect();
    fit.sort_unstable();
    val.sort_unstable();
    Ok((table.subset(&fit), table.subset(&val)))
}

fn distance_to_ideal(s: &OracleScore) -> f64 {
    ((100.0 - s.pd).powi(2) + s.pf.powi(2)).sqrt()
}

/// Trains `config` on the SMOTE-balanced fit half and scores the
/// validation half.
pub fn holdout_score(
    fit: &MetricTable,
    validation: &MetricTable,
    config: &ForestConfig,
    seed: u64,
    gate: &Gate,
) -> Result<OracleScore> {
    let balanced = smote(fit, DEFAULT_K, 1.0, seed::derive(seed, &["smote"]))?;
    let forest = fit_forest(&balanced, config)?;
    score(&forest, validation, gate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub config: ForestConfig,
    /// Validation score of the best configuration.
    pub validation: OracleScore,
    /// Validation score of the default configuration on the same split.
    pub untuned: OracleScore,
    pub history: Vec<f64>,
}

fn params(bounds: &ForestBounds) -> [Param; 4] {
    [
        Param::int(bounds.n_trees.0, bounds.n_trees.1),
        Param::int(bounds.max_depth.0, bounds.max_depth.1),
        Param::int(bounds.min_leaf.0, bounds.min_leaf.1),
        Param::real(bounds.feature_fraction.0, bounds.feature_fraction.1),
    ]
}

fn decode(x: &[f64], forest_seed: u64) -> ForestConfig {
    ForestConfig {
        n_trees: x[0] as usize,
        max_depth: x[1] as usize,
        min_leaf: x[2] as usize,
        feature_fraction: x[3],
        seed: forest_seed,
    }
}

/// Searches forest settings for the smallest distance to (pd=100, pf=0)
/// on a stratified internal split of `train`.
pub fn de_tune(
    train: &MetricTable,
    bounds: &ForestBounds,
    de_config: &DeConfig,
    gate: &Gate,
    seed: u64,
) -> Result<TuneOutcome> {
    bounds.validate()?;
    let positives = train.n_defective();
    if positives < MIN_ROWS_PER_CLASS || train.len() - positives < MIN_ROWS_PER_CLASS {
        return Err(Error::InvalidInput(format!(
            "tuning needs {MIN_ROWS_PER_CLASS} rows per class, got {positives} defective of {}",
            train.len()
        )));
    }
    let (fit, validation) = stratified_halves(train, seed::derive(seed, &["split"]))?;
    let balanced = smote(&fit, DEFAULT_K, 1.0, seed::derive(seed, &["smote"]))?;
    let forest_seed = seed::derive(seed, &["forest"]);
    let evaluate = |config: &ForestConfig| -> Result<OracleScore> {
        let forest = fit_forest(&balanced, config)?;
        score(&forest, &validation, gate)
    };

    let start = bounds.clamp(&ForestConfig {
        seed: forest_seed,
        ..ForestConfig::default()
    });
    let untuned = evaluate(&start)?;
    let initial = vec![vec![
        start.n_trees as f64,
        start.max_depth as f64,
        start.min_leaf as f64,
        start.feature_fraction,
    ]];
    let outcome = de::minimize(
        &params(bounds),
        de_config,
        &initial,
        seed::derive(seed, &["de"]),
        |x| evaluate(&decode(x, forest_seed)).map_or(f64::INFINITY, |s| distance_to_ideal(&s)),
    )?;
    let config = decode(&outcome.best, forest_seed);
    Ok(TuneOutcome {
        config,
        validation: evaluate(&config)?,
        untuned,
        history: outcome.history,
    })
}
