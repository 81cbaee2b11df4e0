//! Nonparametric comparison machinery: Vargha-Delaney A12, a pooled
//! bootstrap test on mean differences, Scott-Knott ranking, and
//! percentile summaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mu = mean(values);
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64;
    (mu, var.sqrt())
}

/// Percentile of already-sorted data, linear interpolation between the
/// closest ranks (`h = (n-1)·p`).
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("percentile of empty list".into()));
    }
    Ok(percentile_sorted(&sorted_copy(values), p))
}

/// Median and inter-quartile range (75th − 25th percentile).
pub fn median_iqr(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidInput("median of empty list".into()));
    }
    let s = sorted_copy(values);
    Ok((
        percentile_sorted(&s, 0.5),
        percentile_sorted(&s, 0.75) - percentile_sorted(&s, 0.25),
    ))
}

/// Probability that a draw from `x` exceeds a draw from `y`, ties counting half.
pub fn a12(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("a12 needs two non-empty samples".into()));
    }
    let ys = sorted_copy(y);
    let mut twice_wins = 0u64;
    for &xi in x {
        let below = ys.partition_point(|&v| v < xi);
        let not_above = ys.partition_point(|&v| v <= xi);
        twice_wins += 2 * below as u64 + (not_above - below) as u64;
    }
    Ok(twice_wins as f64 / (2.0 * x.len() as f64 * y.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub resamples: usize,
    pub confidence: f64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Self {
            resamples: 1000,
            confidence: 0.99,
        }
    }
}

impl Bootstrap {
    /// Two-sample test on the absolute difference in means. Both samples are
    /// redrawn from the pooled values (the null of one shared distribution);
    /// the difference is significant iff the observed gap exceeds the
    /// `confidence` quantile of the resampled gaps.
    pub fn differs<R: Rng + ?Sized>(&self, x: &[f64], y: &[f64], rng: &mut R) -> Result<bool> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidInput("bootstrap needs two non-empty samples".into()));
        }
        if self.resamples < 100 {
            return Err(Error::InvalidInput(format!(
                "bootstrap needs at least 100 resamples, got {}",
                self.resamples
            )));
        }
        let observed = (mean(x) - mean(y)).abs();
        if observed == 0.0 {
            return Ok(false);
        }
        let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
        let n = pooled.len();
        let mut gaps = Vec::with_capacity(self.resamples);
        for _ in 0..self.resamples {
            let sx: f64 = (0..x.len()).map(|_| pooled[rng.random_range(0..n)]).sum();
            let sy: f64 = (0..y.len()).map(|_| pooled[rng.random_range(0..n)]).sum();
            gaps.push((sx / x.len() as f64 - sy / y.len() as f64).abs());
        }
        gaps.sort_by(f64::total_cmp);
        Ok(observed > percentile_sorted(&gaps, self.confidence))
    }
}

pub fn bootstrap_diff<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    resamples: usize,
    confidence: f64,
    rng: &mut R,
) -> Result<bool> {
    Bootstrap {
        resamples,
        confidence,
    }
    .differs(x, y, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentSamples {
    pub name: String,
    pub values: Vec<f64>,
}

impl TreatmentSamples {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub name: String,
    pub rank: usize,
    pub median: f64,
    pub iqr: f64,
    pub p25: f64,
    pub p75: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub entries: Vec<RankEntry>,
}

impl RankTable {
    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.rank)
    }

    pub fn entry(&self, name: &str) -> Option<&RankEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScottKnott {
    pub bootstrap: Bootstrap,
    pub a12_floor: f64,
    pub seed: u64,
}

impl Default for ScottKnott {
    fn default() -> Self {
        Self {
            bootstrap: Bootstrap::default(),
            a12_floor: 0.6,
            seed: 1,
        }
    }
}

struct Group<'a> {
    name: &'a str,
    values: &'a [f64],
    median: f64,
    sum: f64,
}

impl ScottKnott {
    /// Ranks treatments, rank 1 holding the largest medians. A division is
    /// kept only when the bootstrap test and the A12 effect size agree.
    /// Treatments with no samples are omitted.
    pub fn rank(&self, treatments: &[TreatmentSamples]) -> RankTable {
        let mut groups: Vec<Group> = treatments
            .iter()
            .filter(|t| !t.values.is_empty())
            .map(|t| Group {
                name: &t.name,
                values: &t.values,
                median: median_iqr(&t.values).map(|m| m.0).unwrap_or(0.0),
                sum: t.values.iter().sum(),
            })
            .collect();
        groups.sort_by(|a, b| b.median.total_cmp(&a.median));

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut ranks = vec![0usize; groups.len()];
        let mut next_rank = 1;
        self.divide(&groups, 0, &mut ranks, &mut next_rank, &mut rng);

        let mut entries: Vec<RankEntry> = groups
            .iter()
            .zip(&ranks)
            .map(|(g, &rank)| {
                let s = sorted_copy(g.values);
                let p25 = percentile_sorted(&s, 0.25);
                let p75 = percentile_sorted(&s, 0.75);
                RankEntry {
                    name: g.name.to_string(),
                    rank,
                    median: g.median,
                    iqr: p75 - p25,
                    p25,
                    p75,
                    n: g.values.len(),
                }
            })
            .collect();
        entries.sort_by(|a, b| a.rank.cmp(&b.rank).then(b.median.total_cmp(&a.median)));
        RankTable { entries }
    }

    fn divide(
        &self,
        groups: &[Group],
        offset: usize,
        ranks: &mut [usize],
        next_rank: &mut usize,
        rng: &mut ChaCha8Rng,
    ) {
        if groups.len() > 1 {
            if let Some(cut) = best_cut(groups) {
                let left: Vec<f64> = groups[..cut].iter().flat_map(|g| g.values).copied().collect();
                let right: Vec<f64> = groups[cut..].iter().flat_map(|g| g.values).copied().collect();
                // The left part holds the larger medians.
                let big = a12(&left, &right).is_ok_and(|a| a >= self.a12_floor);
                // Skip the bootstrap when the effect is already too small.
                let significant = big && self.bootstrap.differs(&left, &right, rng).unwrap_or(false);
                if significant {
                    self.divide(&groups[..cut], offset, ranks, next_rank, rng);
                    self.divide(&groups[cut..], offset + cut, ranks, next_rank, rng);
                    return;
                }
            }
        }
        for r in &mut ranks[offset..offset + groups.len()] {
            *r = *next_rank;
        }
        *next_rank += 1;
    }
}

/// Cut index maximizing `E(Δ) = Σ (n_part/n)·(μ_part − μ)²`.
fn best_cut(groups: &[Group]) -> Option<usize> {
    let total_n: usize = groups.iter().map(|g| g.values.len()).sum();
    let total_sum: f64 = groups.iter().map(|g| g.sum).sum();
    let mu = total_sum / total_n as f64;
    let mut best: Option<(usize, f64)> = None;
    let (mut left_n, mut left_sum) = (0usize, 0.0);
    for cut in 1..groups.len() {
        left_n += groups[cut - 1].values.len();
        left_sum += groups[cut - 1].sum;
        let right_n = total_n - left_n;
        let right_sum = total_sum - left_sum;
        let lm = left_sum / left_n as f64;
        let rm = right_sum / right_n as f64;
        let e = left_n as f64 / total_n as f64 * (lm - mu).powi(2)
            + right_n as f64 / total_n as f64 * (rm - mu).powi(2);
        if best.is_none_or(|(_, b)| e > b) {
            best = Some((cut, e));
        }
    }
    best.map(|(cut, _)| cut)
}

pub fn scott_knott(
    treatments: &[TreatmentSamples],
    confidence: f64,
    a12_floor: f64,
    seed: u64,
) -> RankTable {
    ScottKnott {
        bootstrap: Bootstrap {
            confidence,
            ..Bootstrap::default()
        },
        a12_floor,
        seed,
    }
    .rank(treatments)
}
