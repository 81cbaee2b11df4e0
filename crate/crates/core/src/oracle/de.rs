//! Differential evolution (rand/1/bin), minimizing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population: usize,
    pub generations: usize,
    pub f: f64,
    pub cr: f64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 30,
            f: 0.75,
            cr: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub lo: f64,
    pub hi: f64,
    pub integer: bool,
}

impl Param {
    pub fn real(lo: f64, hi: f64) -> Self {
        Self { lo, hi, integer: false }
    }

    pub fn int(lo: usize, hi: usize) -> Self {
        Self {
            lo: lo as f64,
            hi: hi as f64,
            integer: true,
        }
    }

    fn fix(&self, v: f64) -> f64 {
        let v = v.clamp(self.lo, self.hi);
        if self.integer {
            v.round()
        } else {
            v
        }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        if self.hi > self.lo {
            self.fix(rng.random_range(self.lo..=self.hi))
        } else {
            self.lo
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub fitness: f64,
    /// Best fitness after initialization and after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Members in `initial` enter the first population (clamped and rounded);
/// the rest are drawn uniformly. A trial replaces its parent when it is no
/// worse. Each generation's trials are built from the previous generation,
/// so evaluation order does not matter.
pub fn minimize<F>(
    params: &[Param],
    config: &DeConfig,
    initial: &[Vec<f64>],
    seed: u64,
    fitness: F,
) -> Result<DeOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if config.population < 4 {
        return Err(Error::InvalidInput("population must be at least 4".into()));
    }
    if params.iter().any(|p| !(p.lo <= p.hi)) {
        return Err(Error::InvalidInput("parameter with lo > hi".into()));
    }
    let dims = params.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pop: Vec<Vec<f64>> = initial
        .iter()
        .take(config.population)
        .map(|x| params.iter().zip(x).map(|(p, &v)| p.fix(v)).collect())
        .collect();
    while pop.len() < config.population {
        pop.push(params.iter().map(|p| p.draw(&mut rng)).collect());
    }
    let mut scores: Vec<f64> = pop.par_iter().map(|x| fitness(x)).collect();
    let mut evaluations = pop.len();
    let best_of = |s: &[f64]| s.iter().copied().fold(f64::INFINITY, f64::min);
    let mut history = vec![best_of(&scores)];

    for _ in 0..config.generations {
        let trials: Vec<Vec<f64>> = (0..pop.len())
            .map(|i| {
                let mut pick = || loop {
                    let j = rng.random_range(0..pop.len());
                    if j != i {
                        break j;
                    }
                };
                let a = pick();
                let b = loop {
                    let j = pick();
                    if j != a {
                        break j;
                    }
                };
                let c = loop {
                    let j = pick();
                    if j != a && j != b {
                        break j;
                    }
                };
                let forced = rng.random_range(0..dims.max(1));
                (0..dims)
                    .map(|d| {
                        if d == forced || rng.random::<f64>() < config.cr {
                            params[d].fix(pop[a][d] + config.f * (pop[b][d] - pop[c][d]))
                        } else {
                            pop[i][d]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_scores: Vec<f64> = trials.par_iter().map(|x| fitness(x)).collect();
        evaluations += trials.len();
        for (i, (trial, score)) in trials.into_iter().zip(trial_scores).enumerate() {
            if score <= scores[i] {
                pop[i] = trial;
                scores[i] = score;
            }
        }
        history.push(best_of(&scores));
    }

    let best = (0..pop.len())
        .min_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    Ok(DeOutcome {
        best: pop[best].clone(),
        fitness: scores[best],
        history,
        evaluations,
    })
}
