//! The verification oracle: a SMOTE-balanced, DE-tuned random forest that
//! judges whether changed modules still look defective.

pub mod de;
pub mod forest;
pub mod smote;
pub mod tune;

use serde::{Deserialize, Serialize};

use crate::data::MetricTable;
use crate::error::{Error, Result};
use crate::seed;

pub use de::{DeConfig, DeOutcome, Param};
pub use forest::{fit_forest, Forest, Tree};
pub use smote::smote;
pub use tune::{de_tune, holdout_score, stratified_halves, TuneOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub feature_fraction: f64,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 30,
            min_leaf: 1,
            feature_fraction: 0.2,
            seed: 1,
        }
    }
}

impl ForestConfig {
    pub fn features_per_split(&self, n_features: usize) -> usize {
        ((self.feature_fraction * n_features as f64).round() as usize).clamp(1, n_features.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        ForestBounds::default().check(self)
    }

    /// `key=value` lines, one per field.
    pub fn to_kv(&self) -> String {
        format!(
            "n_trees={}\nmax_depth={}\nmin_leaf={}\nfeature_fraction={}\nseed={}\n",
            self.n_trees, self.max_depth, self.min_leaf, self.feature_fraction, self.seed
        )
    }
}

/// Inclusive search ranges for each tunable field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestBounds {
    pub n_trees: (usize, usize),
    pub max_depth: (usize, usize),
    pub min_leaf: (usize, usize),
    pub feature_fraction: (f64, f64),
}

impl Default for ForestBounds {
    fn default() -> Self {
        Self {
            n_trees: (10, 150),
            max_depth: (1, 30),
            min_leaf: (1, 20),
            feature_fraction: (0.1, 1.0),
        }
    }
}

impl ForestBounds {
    pub fn validate(&self) -> Result<()> {
        let outer = ForestBounds::default();
        let within = |(lo, hi): (usize, usize), (olo, ohi): (usize, usize)| olo <= lo && lo <= hi && hi <= ohi;
        let (flo, fhi) = self.feature_fraction;
        if within(self.n_trees, outer.n_trees)
            && within(self.max_depth, outer.max_depth)
            && within(self.min_leaf, outer.min_leaf)
            && 0.1 <= flo
            && flo <= fhi
            && fhi <= 1.0
        {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("forest bounds out of range: {self:?}")))
        }
    }

    pub fn check(&self, c: &ForestConfig) -> Result<()> {
        let inside = |v: usize, (lo, hi): (usize, usize)| lo <= v && v <= hi;
        let (flo, fhi) = self.feature_fraction;
        if inside(c.n_trees, self.n_trees)
            && inside(c.max_depth, self.max_depth)
            && inside(c.min_leaf, self.min_leaf)
            && flo <= c.feature_fraction
            && c.feature_fraction <= fhi
        {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("forest config out of bounds: {c:?}")))
        }
    }

    pub fn clamp(&self, c: &ForestConfig) -> ForestConfig {
        ForestConfig {
            n_trees: c.n_trees.clamp(self.n_trees.0, self.n_trees.1),
            max_depth: c.max_depth.clamp(self.max_depth.0, self.max_depth.1),
            min_leaf: c.min_leaf.clamp(self.min_leaf.0, self.min_leaf.1),
            feature_fraction: c.feature_fraction.clamp(self.feature_fraction.0, self.feature_fraction.1),
            seed: c.seed,
        }
    }
}

/// Usability gate on recall and false alarm, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub pd_min: f64,
    pub pf_max: f64,
}

impl Default for Gate {
    fn default() -> Self {
        Self {
            pd_min: 60.0,
            pf_max: 30.0,
        }
    }
}

impl Gate {
    pub fn passes(&self, pd: f64, pf: f64) -> bool {
        pd >= self.pd_min && pf <= self.pf_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleScore {
    pub pd: f64,
    pub pf: f64,
    pub usable: bool,
}

impl OracleScore {
    pub fn from_confusion(tp: usize, fn_: usize, fp: usize, tn: usize, gate: &Gate) -> Result<Self> {
        if tp + fn_ == 0 {
            return Err(Error::UndefinedRate("pd", "no defective rows in test data"));
        }
        if fp + tn == 0 {
            return Err(Error::UndefinedRate("pf", "no clean rows in test data"));
        }
        let pd = 100.0 * tp as f64 / (tp + fn_) as f64;
        let pf = 100.0 * fp as f64 / (fp + tn) as f64;
        Ok(Self {
            pd,
            pf,
            usable: gate.passes(pd, pf),
        })
    }
}

pub fn score(forest: &Forest, test: &MetricTable, gate: &Gate) -> Result<OracleScore> {
    if test.is_empty() {
        return Err(Error::EmptyTable);
    }
    let (mut tp, mut fn_, mut fp, mut tn) = (0, 0, 0, 0);
    for row in &test.rows {
        match (forest.predict(&row.metrics), row.is_defective()) {
            (true, true) => tp += 1,
            (false, true) => fn_ += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    OracleScore::from_confusion(tp, fn_, fp, tn, gate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub bounds: ForestBounds,
    pub de: DeConfig,
    pub gate: Gate,
    /// Skip the search and use the default forest.
    pub untuned: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            bounds: ForestBounds::default(),
            de: DeConfig::default(),
            gate: Gate::default(),
            untuned: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifiedOracle {
    pub forest: Forest,
    pub config: ForestConfig,
    /// Score on the held-out half of the training data.
    pub validation: OracleScore,
    /// Default-config score on the same split, when tuning ran.
    pub untuned: Option<OracleScore>,
    pub tuned: bool,
}

impl VerifiedOracle {
    pub fn usable(&self) -> bool {
        self.validation.usable
    }
}

/// Tunes on an internal split of `train`, then refits the chosen forest on
/// all of `train` after SMOTE. Tables too small to tune fall back to the
/// default forest, still scored on a held-out half.
pub fn build_verified_oracle(
    train: &MetricTable,
    options: &OracleOptions,
    master_seed: u64,
) -> Result<VerifiedOracle> {
    let forest_seed = seed::derive(master_seed, &["forest"]);
    let small = {
        let pos = train.n_defective();
        pos < tune::MIN_ROWS_PER_CLASS || train.len() - pos < tune::MIN_ROWS_PER_CLASS
    };
    let (config, validation, untuned, tuned) = if options.untuned || small {
        let config = options.bounds.clamp(&ForestConfig {
            seed: forest_seed,
            ..ForestConfig::default()
        });
        let (fit, val) = stratified_halves(train, seed::derive(master_seed, &["split"]))?;
        let s = holdout_score(&fit, &val, &config, master_seed, &options.gate)?;
        (config, s, None, false)
    } else {
        let out = de_tune(train, &options.bounds, &options.de, &options.gate, master_seed)?;
        (out.config, out.validation, Some(out.untuned), true)
    };
    let balanced = smote(train, smote::DEFAULT_K, 1.0, seed::derive(master_seed, &["smote-full"]))?;
    let forest = fit_forest(&balanced, &config)?;
    Ok(VerifiedOracle {
        forest,
        config,
        validation,
        untuned,
        tuned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MetricSchema, ModuleRecord, N_METRICS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn confusion_arithmetic() {
        let g = Gate::default();
        let s = OracleScore::from_confusion(6, 4, 3, 7, &g).unwrap();
        assert!((s.pd - 60.0).abs() < 1e-12 && (s.pf - 30.0).abs() < 1e-12);
        assert!(s.usable);
        let perfect = OracleScore::from_confusion(5, 0, 0, 5, &g).unwrap();
        assert_eq!((perfect.pd, perfect.pf), (100.0, 0.0));
        let always = OracleScore::from_confusion(5, 0, 5, 0, &g).unwrap();
        assert_eq!((always.pd, always.pf, always.usable), (100.0, 100.0, false));
        assert!(OracleScore::from_confusion(0, 0, 3, 3, &g).is_err());
        assert!(OracleScore::from_confusion(3, 3, 0, 0, &g).is_err());
        assert!(!OracleScore::from_confusion(59, 41, 0, 10, &g).unwrap().usable);
        assert!(!OracleScore::from_confusion(60, 40, 31, 69, &g).unwrap().usable);
    }

    #[test]
    fn bounds_checks() {
        let b = ForestBounds::default();
        assert!(b.check(&ForestConfig::default()).is_ok());
        assert!(b.check(&ForestConfig { n_trees: 151, ..ForestConfig::default() }).is_err());
        assert!(b.check(&ForestConfig { feature_fraction: 0.05, ..ForestConfig::default() }).is_err());
        assert!(ForestBounds { max_depth: (0, 3), ..b }.validate().is_err());
        assert_eq!(ForestConfig::default().features_per_split(20), 4);
        assert_eq!(ForestConfig { feature_fraction: 0.1, ..ForestConfig::default() }.features_per_split(3), 1);
    }

    fn skewed(n: usize, clean: usize, seed: u64) -> MetricTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|i| ModuleRecord {
                module_name: format!("m{i}"),
                version: "1".into(),
                metrics: (0..N_METRICS).map(|_| rng.random_range(0.0..10.0)).collect(),
                n_defects: u32::from(i >= clean),
            })
            .collect();
        MetricTable::new(MetricSchema::jureczko(), rows)
    }

    #[test]
    fn nearly_all_defective_is_not_usable() {
        let t = skewed(1000, 10, 1);
        let oracle = build_verified_oracle(&t, &OracleOptions::default(), 3).unwrap();
        assert!(!oracle.tuned);
        assert!(!oracle.usable(), "{:?}", oracle.validation);
    }

    #[test]
    fn oracle_is_seeded_and_leaves_input_alone() {
        let t = tune::tests::noisy(200, 9);
        let before = t.clone();
        let options = OracleOptions {
            de: DeConfig {
                population: 5,
                generations: 2,
                ..DeConfig::default()
            },
            bounds: ForestBounds {
                n_trees: (10, 20),
                ..ForestBounds::default()
            },
            ..OracleOptions::default()
        };
        let a = build_verified_oracle(&t, &options, 11).unwrap();
        let b = build_verified_oracle(&t, &options, 11).unwrap();
        assert_eq!(a.config, b.config);
        assert_eq!(a.validation, b.validation);
        assert_eq!(a.forest, b.forest);
        assert_eq!(t, before);
    }
}
