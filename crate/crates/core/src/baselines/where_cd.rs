//! WHERE-style recursive bisection and centroid-delta plans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{MetricTable, MinMax, ModuleRecord};
use crate::error::{Error, Result};
use crate::plan::{Change, Plan, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub centroid: Vec<f64>,
    /// Percent of member rows that are defective.
    pub defect_proneness: f64,
    pub size: usize,
    /// Row indices into the training table.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroids {
    pub clusters: Vec<Cluster>,
    pub norm: MinMax,
}

impl Centroids {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn nearest(&self, metrics: &[f64]) -> Option<usize> {
        nearest_by(self.clusters.iter().enumerate(), |c| {
            self.norm.distance(metrics, &c.centroid)
        })
    }

    /// Other clusters ordered by distance from cluster `i`.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let from = &self.clusters[i].centroid;
        let mut others: Vec<(f64, usize)> = (0..self.len())
            .filter(|&j| j != i)
            .map(|j| (self.norm.distance(from, &self.clusters[j].centroid), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        others.into_iter().map(|(_, j)| j).collect()
    }
}

fn nearest_by<'a>(
    items: impl Iterator<Item = (usize, &'a Cluster)>,
    dist: impl Fn(&Cluster) -> f64,
) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, c) in items {
        let d = dist(c);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Bisector<'a> {
    scaled: &'a [Vec<f64>],
    floor: usize,
    rng: ChaCha8Rng,
    leaves: Vec<Vec<usize>>,
}

impl Bisector<'_> {
    fn farthest(&self, from: usize, rows: &[usize]) -> usize {
        let mut best = (f64::NEG_INFINITY, from);
        for &r in rows {
            let d = sq_dist(&self.scaled[from], &self.scaled[r]);
            if d > best.0 {
                best = (d, r);
            }
        }
        best.1
    }

    fn split(&mut self, rows: Vec<usize>) {
        if rows.len() < 2 * self.floor {
            self.leaves.push(rows);
            return;
        }
        let start = rows[self.rng.random_range(0..rows.len())];
        let east = self.farthest(start, &rows);
        let west = self.farthest(east, &rows);
        let c2 = sq_dist(&self.scaled[east], &self.scaled[west]);
        if c2 == 0.0 {
            self.leaves.push(rows);
            return;
        }
        let c = c2.sqrt();
        let mut projected: Vec<(f64, usize)> = rows
            .iter()
            .map(|&r| {
                let a2 = sq_dist(&self.scaled[r], &self.scaled[east]);
                let b2 = sq_dist(&self.scaled[r], &self.scaled[west]);
                ((a2 + c2 - b2) / (2.0 * c), r)
            })
            .collect();
        projected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let half = projected.len() / 2;
        let right = projected.split_off(half);
        self.split(projected.into_iter().map(|(_, r)| r).collect());
        self.split(right.into_iter().map(|(_, r)| r).collect());
    }
}

/// Clusters are bisected until they hold fewer than twice
/// `max(4, ceil(sqrt(n)))` rows.
pub fn where_cluster(train: &MetricTable, seed: u64) -> Result<Centroids> {
    let n = train.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "clustering needs at least 4 rows, got {n}"
        )));
    }
    let norm = MinMax::fit(train);
    let scaled: Vec<Vec<f64>> = train
        .rows
        .iter()
        .map(|r| {
            r.metrics
                .iter()
                .enumerate()
                .map(|(m, &v)| norm.scale(m, v))
                .collect()
        })
        .collect();
    let mut bisector = Bisector {
        scaled: &scaled,
        floor: 4usize.max((n as f64).sqrt().ceil() as usize),
        rng: ChaCha8Rng::seed_from_u64(seed),
        leaves: Vec::new(),
    };
    bisector.split((0..n).collect());

    let width = train.n_metrics();
    let clusters = bisector
        .leaves
        .into_iter()
        .map(|members| {
            let mut centroid = vec![0.0; width];
            let mut defective = 0usize;
            for &r in &members {
                let row = &train.rows[r];
                for (c, v) in centroid.iter_mut().zip(&row.metrics) {
                    *c += v;
                }
                defective += usize::from(row.is_defective());
            }
            let size = members.len();
            centroid.iter_mut().for_each(|c| *c /= size as f64);
            Cluster {
                centroid,
                defect_proneness: 100.0 * defective as f64 / size as f64,
                size,
                members,
            }
        })
        .collect();
    Ok(Centroids { clusters, norm })
}

/// Moves a module toward the closest cluster that is less defective than
/// its own: every metric where the two centroids differ is set to the
/// better centroid's value.
pub fn cd_plan(centroids: &Centroids, module: &ModuleRecord) -> Plan {
    let Some(home) = centroids.nearest(&module.metrics) else {
        return Plan::empty();
    };
    let here = &centroids.clusters[home];
    let better = nearest_by(
        centroids
            .clusters
            .iter()
            .enumerate()
            .filter(|(i, c)| *i != home && c.defect_proneness < here.defect_proneness),
        |c| centroids.norm.distance(&here.centroid, &c.centroid),
    );
    let Some(target) = better else {
        return Plan::empty();
    };
    let there = &centroids.clusters[target];
    let changes = here
        .centroid
        .iter()
        .zip(&there.centroid)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(m, (_, &value))| Change::new(m, Target::Value { value }, module.metrics[m]))
        .collect();
    Plan {
        changes,
        source_leaf: Some(home),
        target_leaf: Some(target),
    }
}
