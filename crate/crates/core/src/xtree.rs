//! The XTREE planner.
//!
//! A decision tree is grown over discretized metrics: each node splits on
//! the remaining metric whose ranges leave the smallest expected defect σ,
//! with ranges recomputed on the node's own rows. A module is planned by
//! descending to its leaf, climbing until some leaf under the current
//! ancestor is at most half as defect-prone, and taking the branch
//! conditions on that leaf's path that differ from the module's own path.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{MetricTable, MinMax, ModuleRecord};
use crate::discretize::{self, Discretization, Range, SplitRules};
use crate::error::{Error, Result};
use crate::plan::{Change, Plan, Target};
use crate::stats::{self, Bootstrap};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    /// Minimum leaf size; `None` means `max(4, ⌈√n⌉)` for `n` training rows.
    pub min_leaf: Option<usize>,
    pub rules: SplitRules,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 10,
            min_leaf: None,
            rules: SplitRules::default(),
        }
    }
}

impl TreeConfig {
    pub fn min_leaf_for(&self, n: usize) -> usize {
        self.min_leaf
            .unwrap_or_else(|| 4.max((n as f64).sqrt().ceil() as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub metric: usize,
    pub range: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub level: usize,
    /// Condition leading into this node; `None` at the root.
    pub branch: Option<Branch>,
    pub split_metric: Option<usize>,
    pub children: Vec<NodeId>,
    /// Training row indexes reaching this node.
    pub rows: Vec<usize>,
    /// Percent of member rows that are defective.
    pub defect_proneness: f64,
    pub centroid: Vec<f64>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XTree {
    pub nodes: Vec<Node>,
    pub norm: MinMax,
    pub train: MetricTable,
}

struct Builder<'a> {
    train: &'a MetricTable,
    config: TreeConfig,
    min_leaf: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn new_node(&mut self, parent: Option<NodeId>, level: usize, branch: Option<Branch>, rows: Vec<usize>) -> NodeId {
        let width = self.train.n_metrics();
        let mut centroid = vec![0.0; width];
        let mut defective = 0usize;
        for &i in &rows {
            let r = &self.train.rows[i];
            for (c, v) in centroid.iter_mut().zip(&r.metrics) {
                *c += v;
            }
            defective += usize::from(r.is_defective());
        }
        let n = rows.len().max(1) as f64;
        centroid.iter_mut().for_each(|c| *c /= n);
        self.nodes.push(Node {
            parent,
            level,
            branch,
            split_metric: None,
            children: Vec::new(),
            defect_proneness: 100.0 * defective as f64 / n,
            centroid,
            rows,
        });
        self.nodes.len() - 1
    }

    fn grow(&mut self, id: NodeId, used: &mut Vec<usize>, root_disc: Option<&Discretization>) {
        let node = &self.nodes[id];
        if node.level >= self.config.max_depth || node.rows.len() < 2 * self.min_leaf {
            return;
        }
        let candidates: Vec<discretize::MetricRanges> = match root_disc {
            Some(d) => d.metrics.clone(),
            None => {
                let available: Vec<usize> = (0..self.train.n_metrics())
                    .filter(|m| !used.contains(m))
                    .collect();
                let rules = SplitRules {
                    min_rows: self.min_leaf.max(self.config.rules.min_rows),
                    ..self.config.rules
                };
                discretize::discretize_columns(self.train, &node.rows, &available, &rules)
            }
        };
        let best = candidates
            .iter()
            .filter(|m| m.ranges.len() > 1 && !used.contains(&m.metric))
            .min_by(|a, b| a.score.total_cmp(&b.score).then(a.metric.cmp(&b.metric)));
        let Some(best) = best.cloned() else {
            return;
        };

        let mut parts: Vec<Vec<usize>> = vec![Vec::new(); best.ranges.len()];
        for &i in &self.nodes[id].rows {
            let v = self.train.rows[i].metrics[best.metric];
            parts[branch_index(&best.ranges, v)].push(i);
        }
        self.nodes[id].split_metric = Some(best.metric);
        let level = self.nodes[id].level + 1;
        used.push(best.metric);
        for (range, rows) in best.ranges.iter().zip(parts) {
            let branch = Branch {
                metric: best.metric,
                range: *range,
            };
            let child = self.new_node(Some(id), level, Some(branch), rows);
            self.nodes[id].children.push(child);
            self.grow(child, used, None);
        }
        used.pop();
    }
}

/// Child index for `value` among contiguous ranges; values outside the
/// observed span clamp to the first or last range.
fn branch_index(ranges: &[Range], value: f64) -> usize {
    ranges
        .iter()
        .position(|r| value <= r.high)
        .unwrap_or(ranges.len() - 1)
}

pub fn build_tree(train: &MetricTable, disc: &Discretization, config: &TreeConfig) -> Result<XTree> {
    if train.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut b = Builder {
        train,
        config: *config,
        min_leaf: config.min_leaf_for(train.len()),
        nodes: Vec::new(),
    };
    let root = b.new_node(None, 0, None, (0..train.len()).collect());
    b.grow(root, &mut Vec::new(), Some(disc));
    Ok(XTree {
        nodes: b.nodes,
        norm: MinMax::fit(train),
        train: train.clone(),
    })
}

impl XTree {
    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf()).collect()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    pub fn classify(&self, metrics: &[f64]) -> NodeId {
        let mut id = self.root();
        while let Some(m) = self.nodes[id].split_metric {
            let children = &self.nodes[id].children;
            let ranges: Vec<Range> = children
                .iter()
                .map(|&c| self.nodes[c].branch.expect("child has a branch").range)
                .collect();
            id = children[branch_index(&ranges, metrics[m])];
        }
        id
    }

    pub fn classify_to_leaf(&self, module: &ModuleRecord) -> NodeId {
        self.classify(&module.metrics)
    }

    /// Branch conditions from the root down to `id`.
    pub fn path(&self, id: NodeId) -> Vec<Branch> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            if let Some(b) = self.nodes[c].branch {
                out.push(b);
            }
            cur = self.nodes[c].parent;
        }
        out.reverse();
        out
    }

    fn leaves_under(&self, id: NodeId, out: &mut Vec<NodeId>) {
        let node = &self.nodes[id];
        if node.is_leaf() {
            out.push(id);
        }
        for &c in &node.children {
            self.leaves_under(c, out);
        }
    }

    /// Nearest leaf at most half as defect-prone as `current`, searching
    /// under successively higher ancestors.
    pub fn find_better_sibling(&self, current: NodeId) -> Result<Option<NodeId>> {
        let cur = self
            .nodes
            .get(current)
            .filter(|n| n.is_leaf())
            .ok_or_else(|| Error::InvalidInput(format!("node {current} is not a leaf")))?;
        let limit = 0.5 * cur.defect_proneness;
        let mut ancestor = cur.parent;
        while let Some(a) = ancestor {
            let mut leaves = Vec::new();
            self.leaves_under(a, &mut leaves);
            let best = leaves
                .into_iter()
                .filter(|&l| l != current && self.nodes[l].defect_proneness <= limit)
                .map(|l| (l, self.norm.distance(&self.nodes[l].centroid, &cur.centroid)))
                .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
            if let Some((leaf, _)) = best {
                return Ok(Some(leaf));
            }
            ancestor = self.nodes[a].parent;
        }
        Ok(None)
    }

    /// Changes that move `module` from its leaf onto the better sibling's
    /// path. Modules in a defect-free leaf are left alone.
    pub fn plan_for_module(&self, module: &ModuleRecord) -> Plan {
        let source = self.classify_to_leaf(module);
        let mut plan = Plan {
            source_leaf: Some(source),
            ..Plan::default()
        };
        if self.nodes[source].defect_proneness <= 0.0 {
            return plan;
        }
        let Ok(Some(target)) = self.find_better_sibling(source) else {
            return plan;
        };
        plan.target_leaf = Some(target);
        let have = self.path(source);
        for b in self.path(target) {
            if have.contains(&b) {
                continue;
            }
            let target = Target::Interval {
                low: b.range.low,
                high: b.range.high,
            };
            plan.changes
                .push(Change::new(b.metric, target, module.metrics[b.metric]));
        }
        plan
    }

    /// Indented rendering, one line per branch; leaves end with
    /// `: <defect%>`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_node(self.root(), &mut out);
        if out.is_empty() {
            let root = &self.nodes[0];
            let _ = writeln!(out, ": {:.0}% (n={})", root.defect_proneness, root.row_count());
        }
        out
    }

    fn render_node(&self, id: NodeId, out: &mut String) {
        let node = &self.nodes[id];
        if let Some(b) = node.branch {
            let indent = "|   ".repeat(node.level - 1);
            let open = if b.range.closed_low { '[' } else { '(' };
            let _ = write!(
                out,
                "{indent}${}={open}{}, {}]",
                self.train.schema.name(b.metric),
                fmt_bound(b.range.low),
                fmt_bound(b.range.high)
            );
            if node.is_leaf() {
                let _ = write!(out, ": {:.0}% (n={})", node.defect_proneness, node.row_count());
            }
            out.push('\n');
        }
        for &c in &node.children {
            self.render_node(c, out);
        }
    }
}

fn fmt_bound(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub fn classify_to_leaf(tree: &XTree, module: &ModuleRecord) -> NodeId {
    tree.classify_to_leaf(module)
}

pub fn find_better_sibling(tree: &XTree, current: NodeId) -> Result<Option<NodeId>> {
    tree.find_better_sibling(current)
}

pub fn plan_for_module(tree: &XTree, module: &ModuleRecord) -> Plan {
    tree.plan_for_module(module)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionTable {
    /// Per schema metric: majority sign among significant pair findings.
    pub signs: Vec<Option<Sign>>,
    pub plus_votes: Vec<usize>,
    pub minus_votes: Vec<usize>,
    pub pairs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub alpha: f64,
    pub a12_floor: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for WhatIf {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            a12_floor: 0.6,
            resamples: 1000,
            seed: 1,
        }
    }
}

/// For every pair of leaves with different defect rates, marks each metric
/// whose member values differ (bootstrap at `1 − alpha` and A12 not small):
/// `+` when the less defective leaf holds higher values, `-` when lower.
/// Per metric the majority sign wins; ties stay blank.
pub fn whatif_directions(tree: &XTree, params: &WhatIf) -> Result<DirectionTable> {
    let leaves = tree.leaves();
    if leaves.len() < 2 {
        return Err(Error::InvalidInput("what-if study needs at least two leaves".into()));
    }
    let width = tree.train.n_metrics();
    let column = |leaf: NodeId, m: usize| -> Vec<f64> {
        tree.nodes[leaf]
            .rows
            .iter()
            .map(|&i| tree.train.rows[i].metrics[m])
            .collect()
    };
    let boot = Bootstrap {
        resamples: params.resamples,
        confidence: 1.0 - params.alpha,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut plus = vec![0usize; width];
    let mut minus = vec![0usize; width];
    let mut pairs = 0;
    for (k, &a) in leaves.iter().enumerate() {
        for &b in &leaves[k + 1..] {
            let (pa, pb) = (tree.nodes[a].defect_proneness, tree.nodes[b].defect_proneness);
            if pa == pb {
                continue;
            }
            let (worse, better) = if pa > pb { (a, b) } else { (b, a) };
            pairs += 1;
            for m in 0..width {
                let good = column(better, m);
                let bad = column(worse, m);
                let effect = stats::a12(&good, &bad)?;
                let sign = if effect >= params.a12_floor {
                    Sign::Plus
                } else if effect <= 1.0 - params.a12_floor {
                    Sign::Minus
                } else {
                    continue;
                };
                if !boot.differs(&good, &bad, &mut rng)? {
                    continue;
                }
                match sign {
                    Sign::Plus => plus[m] += 1,
                    Sign::Minus => minus[m] += 1,
                }
            }
        }
    }
    let signs = plus
        .iter()
        .zip(&minus)
        .map(|(&p, &n)| match p.cmp(&n) {
            std::cmp::Ordering::Greater => Some(Sign::Plus),
            std::cmp::Ordering::Less => Some(Sign::Minus),
            std::cmp::Ordering::Equal => None,
        })
        .collect();
    Ok(DirectionTable {
        signs,
        plus_votes: plus,
        minus_votes: minus,
        pairs,
    })
}
