//! Random forest of Gini CART trees.
//!
//! Each tree keeps one presorted index list per feature and partitions the
//! lists stably at every split, so no node ever re-sorts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ForestConfig;
use crate::data::MetricTable;
use crate::error::{Error, Result};
use crate::seed;

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TreeNode {
    feature: u32,
    threshold: f64,
    left: u32,
    right: u32,
    vote: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> bool {
        let mut at = 0usize;
        loop {
            let node = &self.nodes[at];
            if node.feature == LEAF {
                return node.vote;
            }
            at = if row[node.feature as usize] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            let n = &nodes[at];
            if n.feature == LEAF {
                0
            } else {
                1 + walk(nodes, n.left as usize).max(walk(nodes, n.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.feature == LEAF).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub config: ForestConfig,
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn votes(&self, row: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.predict(row)).count()
    }

    pub fn vote_fraction(&self, row: &[f64]) -> f64 {
        self.votes(row) as f64 / self.trees.len() as f64
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.vote_fraction(row) > 0.5
    }

    pub fn predict_table(&self, table: &MetricTable) -> Vec<bool> {
        table.rows.iter().map(|r| self.predict(&r.metrics)).collect()
    }

    pub fn count_defective(&self, table: &MetricTable) -> usize {
        table.rows.iter().filter(|r| self.predict(&r.metrics)).count()
    }
}

struct Grower<'a> {
    columns: &'a [Vec<f64>],
    /// Sample position → table row.
    rows: Vec<u32>,
    labels: Vec<bool>,
    sorted: Vec<Vec<u32>>,
    goes_left: Vec<bool>,
    buffer: Vec<u32>,
    config: &'a ForestConfig,
    n_try: usize,
    features: Vec<usize>,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

struct Best {
    feature: usize,
    left: usize,
    threshold: f64,
    proxy: f64,
}

impl Grower<'_> {
    fn value(&self, feature: usize, pos: u32) -> f64 {
        self.columns[feature][self.rows[pos as usize] as usize]
    }

    fn leaf(&mut self, positives: usize, n: usize) -> u32 {
        self.nodes.push(TreeNode {
            feature: LEAF,
            threshold: 0.0,
            left: 0,
            right: 0,
            vote: 2 * positives > n,
        });
        (self.nodes.len() - 1) as u32
    }

    /// Gini split on one feature, scored by Σ p_c²/n_side (higher is purer).
    fn scan(&self, feature: usize, start: usize, end: usize, total_pos: usize) -> Option<Best> {
        let slice = &self.sorted[feature][start..end];
        let n = slice.len();
        let min_leaf = self.config.min_leaf;
        let mut best: Option<Best> = None;
        let mut left_pos = 0usize;
        for i in 0..n - 1 {
            left_pos += usize::from(self.labels[slice[i] as usize]);
            let nl = i + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let (v, next) = (self.value(feature, slice[i]), self.value(feature, slice[i + 1]));
            if v >= next {
                continue;
            }
            let (pl, ql) = (left_pos as f64, (nl - left_pos) as f64);
            let right_pos = total_pos - left_pos;
            let (pr, qr) = (right_pos as f64, (nr - right_pos) as f64);
            let proxy = (pl * pl + ql * ql) / nl as f64 + (pr * pr + qr * qr) / nr as f64;
            if best.as_ref().is_none_or(|b| proxy > b.proxy) {
                let mid = 0.5 * (v + next);
                best = Some(Best {
                    feature,
                    left: nl,
                    threshold: if mid < next { mid } else { v },
                    proxy,
                });
            }
        }
        best
    }

    fn grow(&mut self, start: usize, end: usize, depth: usize) -> u32 {
        let n = end - start;
        let positives = self.sorted[0][start..end]
            .iter()
            .filter(|&&p| self.labels[p as usize])
            .count();
        if depth >= self.config.max_depth
            || positives == 0
            || positives == n
            || n < 2 * self.config.min_leaf
        {
            return self.leaf(positives, n);
        }

        // Draw features until n_try non-constant ones have been scanned.
        self.features.shuffle(&mut self.rng);
        let mut best: Option<Best> = None;
        let mut tried = 0;
        for fi in 0..self.features.len() {
            let f = self.features[fi];
            let slice = &self.sorted[f][start..end];
            if self.value(f, slice[0]) == self.value(f, slice[n - 1]) {
                continue;
            }
            if let Some(b) = self.scan(f, start, end, positives) {
                if best.as_ref().is_none_or(|cur| b.proxy > cur.proxy) {
                    best = Some(b);
                }
            }
            tried += 1;
            if tried == self.n_try {
                break;
            }
        }
        let Some(best) = best else {
            return self.leaf(positives, n);
        };

        for (i, &p) in self.sorted[best.feature][start..end].iter().enumerate() {
            self.goes_left[p as usize] = i < best.left;
        }
        for f in 0..self.sorted.len() {
            let list = &mut self.sorted[f][start..end];
            self.buffer.clear();
            let mut w = 0;
            for i in 0..list.len() {
                let p = list[i];
                if self.goes_left[p as usize] {
                    list[w] = p;
                    w += 1;
                } else {
                    self.buffer.push(p);
                }
            }
            list[w..].copy_from_slice(&self.buffer);
        }

        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            feature: best.feature as u32,
            threshold: best.threshold,
            left: 0,
            right: 0,
            vote: 2 * positives > n,
        });
        let left = self.grow(start, start + best.left, depth + 1);
        let right = self.grow(start + best.left, end, depth + 1);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        id as u32
    }
}

fn fit_tree(columns: &[Vec<f64>], labels: &[bool], config: &ForestConfig, seed: u64) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = labels.len();
    let rows: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
    let sample_labels: Vec<bool> = rows.iter().map(|&r| labels[r as usize]).collect();
    let sorted = columns
        .iter()
        .map(|col| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[rows[a as usize] as usize].total_cmp(&col[rows[b as usize] as usize]));
            idx
        })
        .collect();
    let n_features = columns.len();
    let mut grower = Grower {
        columns,
        rows,
        labels: sample_labels,
        sorted,
        goes_left: vec![false; n],
        buffer: Vec::with_capacity(n),
        config,
        n_try: config.features_per_split(n_features),
        features: (0..n_features).collect(),
        rng,
        nodes: Vec::new(),
    };
    grower.grow(0, n, 0);
    Tree {
        nodes: grower.nodes,
    }
}

pub fn fit_forest(train: &MetricTable, config: &ForestConfig) -> Result<Forest> {
    config.validate()?;
    let labels = train.labels();
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass("forest training"));
    }
    let columns: Vec<Vec<f64>> = (0..train.n_metrics()).map(|m| train.column(m)).collect();
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|i| fit_tree(&columns, &labels, config, seed::derive_index(config.seed, i as u64)))
        .collect();
    Ok(Forest {
        config: *config,
        trees,
    })
}
