//! Exact-split CART trees and the randomized ensembles built from them.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::rng::{child_rng, Rng};
use crate::table::Matrix;

/// How many features a node inspects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
    Count(usize),
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let n = n_features as f64;
        let m = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => n.sqrt().floor() as usize,
            MaxFeatures::Log2 => n.log2().floor() as usize,
            MaxFeatures::Count(c) => c,
            MaxFeatures::Fraction(f) => (f * n).floor() as usize,
        };
        m.clamp(1, n_features.max(1))
    }

    /// Accepts `"all"`, `"sqrt"`, `"log2"`, a positive integer or a fraction in (0, 1].
    pub fn from_value(v: &Value) -> Result<Self, String> {
        match v {
            Value::String(s) => match s.as_str() {
                "all" => Ok(MaxFeatures::All),
                "sqrt" => Ok(MaxFeatures::Sqrt),
                "log2" => Ok(MaxFeatures::Log2),
                other => Err(format!("max_features '{other}'")),
            },
            Value::Number(n) => {
                if let Some(u) = n.as_u64().filter(|&u| u >= 1) {
                    Ok(MaxFeatures::Count(u as usize))
                } else {
                    match n.as_f64() {
                        Some(f) if f > 0.0 && f <= 1.0 => Ok(MaxFeatures::Fraction(f)),
                        _ => Err(format!("max_features {n}")),
                    }
                }
            }
            other => Err(format!("max_features {other}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitter {
    /// Exhaustive search over every distinct-value midpoint.
    Best,
    /// One uniform threshold per inspected feature.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub splitter: Splitter,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: None, min_samples_split: 2, min_samples_leaf: 1, max_features: MaxFeatures::All, splitter: Splitter::Best }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, name: String, threshold: f64, left: usize, right: usize },
    Leaf { value: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> &[f64] {
        match &self.nodes[self.leaf_index(row)] {
            Node::Leaf { value } => value,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    pub fn set_leaf_value(&mut self, node: usize, value: Vec<f64>) {
        self.nodes[node] = Node::Leaf { value };
    }

    pub fn depth(&self) -> usize {
        fn rec(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Split { left, right, .. } => 1 + rec(t, *left).max(rec(t, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        rec(self, 0)
    }
}

/// Column-major copy of the training matrix, optionally with each column's
/// row order sorted by value (ties by row index).
pub(crate) struct Columns {
    pub cols: Vec<Vec<f64>>,
    pub orders: Option<Vec<Vec<u32>>>,
    pub n_rows: usize,
}

impl Columns {
    pub fn new(x: &Matrix, presort: bool) -> Self {
        let cols: Vec<Vec<f64>> = (0..x.n_cols()).map(|j| x.column(j)).collect();
        let orders = presort.then(|| {
            cols.par_iter()
                .map(|c| {
                    let mut idx: Vec<u32> = (0..c.len() as u32).collect();
                    idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                    idx
                })
                .collect()
        });
        Self { cols, orders, n_rows: x.n_rows() }
    }

    fn n_features(&self) -> usize {
        self.cols.len()
    }
}

/// Node impurity bookkeeping. `proxy(left) + proxy(right) - proxy(parent)` is
/// the weighted impurity decrease of a split.
pub(crate) trait Criterion: Sync {
    type Acc: Clone;
    fn empty(&self) -> Self::Acc;
    fn add(&self, acc: &mut Self::Acc, i: usize, w: f64);
    fn remove(&self, acc: &mut Self::Acc, i: usize, w: f64);
    fn proxy(&self, acc: &Self::Acc) -> f64;
    fn is_pure(&self, acc: &Self::Acc) -> bool;
    fn leaf(&self, acc: &Self::Acc) -> Vec<f64>;
}

pub(crate) struct Gini<'a> {
    pub labels: &'a [usize],
    pub n_classes: usize,
}

#[derive(Clone)]
pub(crate) struct GiniAcc {
    counts: Vec<f64>,
    n: f64,
    sumsq: f64,
}

impl Criterion for Gini<'_> {
    type Acc = GiniAcc;

    fn empty(&self) -> GiniAcc {
        GiniAcc { counts: vec![0.0; self.n_classes], n: 0.0, sumsq: 0.0 }
    }

    fn add(&self, acc: &mut GiniAcc, i: usize, w: f64) {
        let c = &mut acc.counts[self.labels[i]];
        acc.sumsq += w * (2.0 * *c + w);
        *c += w;
        acc.n += w;
    }

    fn remove(&self, acc: &mut GiniAcc, i: usize, w: f64) {
        let c = &mut acc.counts[self.labels[i]];
        acc.sumsq -= w * (2.0 * *c - w);
        *c -= w;
        acc.n -= w;
    }

    fn proxy(&self, acc: &GiniAcc) -> f64 {
        if acc.n > 0.0 {
            acc.sumsq / acc.n
        } else {
            0.0
        }
    }

    fn is_pure(&self, acc: &GiniAcc) -> bool {
        acc.counts.iter().filter(|&&c| c > 0.0).count() <= 1
    }

    fn leaf(&self, acc: &GiniAcc) -> Vec<f64> {
        acc.counts.iter().map(|c| c / acc.n).collect()
    }
}

pub(crate) struct Variance<'a> {
    pub y: &'a [f64],
}

#[derive(Clone)]
pub(crate) struct VarAcc {
    n: f64,
    s: f64,
    min: f64,
    max: f64,
}

impl Criterion for Variance<'_> {
    type Acc = VarAcc;

    fn empty(&self) -> VarAcc {
        VarAcc { n: 0.0, s: 0.0, min: f64::INFINITY, max: f64::NEG_INFINITY }
    }

    fn add(&self, acc: &mut VarAcc, i: usize, w: f64) {
        let y = self.y[i];
        acc.n += w;
        acc.s += w * y;
        acc.min = acc.min.min(y);
        acc.max = acc.max.max(y);
    }

    // min/max are only consulted on node totals, which never see removals.
    fn remove(&self, acc: &mut VarAcc, i: usize, w: f64) {
        acc.n -= w;
        acc.s -= w * self.y[i];
    }

    fn proxy(&self, acc: &VarAcc) -> f64 {
        if acc.n > 0.0 {
            acc.s * acc.s / acc.n
        } else {
            0.0
        }
    }

    fn is_pure(&self, acc: &VarAcc) -> bool {
        acc.max <= acc.min
    }

    fn leaf(&self, acc: &VarAcc) -> Vec<f64> {
        vec![acc.s / acc.n]
    }
}

pub(crate) struct BuildOutput {
    pub tree: Tree,
    /// Impurity decrease credited to each feature.
    pub importance: Vec<f64>,
    /// Leaf node index and its training rows.
    pub leaves: Vec<(usize, Vec<u32>)>,
}

enum Members {
    Sorted(Vec<Vec<u32>>),
    Plain(Vec<u32>),
}

impl Members {
    fn rows(&self) -> &[u32] {
        match self {
            Members::Sorted(o) => &o[0],
            Members::Plain(r) => r,
        }
    }
}

struct Split {
    proxy: f64,
    feature: usize,
    threshold: f64,
}

/// Grows one tree over the rows with positive weight. `Splitter::Best`
/// requires presorted columns.
pub(crate) fn build_tree<C: Criterion>(
    crit: &C,
    data: &Columns,
    weights: &[f64],
    params: &TreeParams,
    names: &[String],
    rng: &mut Rng,
) -> BuildOutput {
    let n_features = data.n_features();
    let root = match params.splitter {
        Splitter::Best => {
            let orders = data.orders.as_ref().expect("best splitter needs presorted columns");
            Members::Sorted(
                orders.iter().map(|o| o.iter().copied().filter(|&i| weights[i as usize] > 0.0).collect()).collect(),
            )
        }
        Splitter::Random => Members::Plain((0..data.n_rows as u32).filter(|&i| weights[i as usize] > 0.0).collect()),
    };
    let mut b = Builder {
        crit,
        data,
        weights,
        params,
        rng,
        mtry: params.max_features.resolve(n_features),
        features: (0..n_features).collect(),
        importance: vec![0.0; n_features],
        go_left: vec![false; data.n_rows],
    };
    let mut nodes: Vec<Node> = Vec::new();
    let mut leaves = Vec::new();
    let mut stack: Vec<(Members, usize, Option<(usize, bool)>)> = vec![(root, 0, None)];
    while let Some((members, depth, parent)) = stack.pop() {
        let id = nodes.len();
        nodes.push(Node::Leaf { value: Vec::new() });
        if let Some((p, is_left)) = parent {
            if let Node::Split { left, right, .. } = &mut nodes[p] {
                if is_left {
                    *left = id;
                } else {
                    *right = id;
                }
            }
        }
        let total = b.total(members.rows());
        match b.find_split(&members, &total, depth) {
            None => {
                nodes[id] = Node::Leaf { value: crit.leaf(&total) };
                leaves.push((id, members.rows().to_vec()));
            }
            Some(s) => {
                b.importance[s.feature] += (s.proxy - crit.proxy(&total)).max(0.0);
                nodes[id] = Node::Split {
                    feature: s.feature,
                    name: names.get(s.feature).cloned().unwrap_or_default(),
                    threshold: s.threshold,
                    left: 0,
                    right: 0,
                };
                let (l, r) = b.partition(members, &s);
                stack.push((r, depth + 1, Some((id, false))));
                stack.push((l, depth + 1, Some((id, true))));
            }
        }
    }
    BuildOutput { tree: Tree { nodes }, importance: b.importance, leaves }
}

struct Builder<'a, C: Criterion> {
    crit: &'a C,
    data: &'a Columns,
    weights: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut Rng,
    mtry: usize,
    features: Vec<usize>,
    importance: Vec<f64>,
    go_left: Vec<bool>,
}

impl<C: Criterion> Builder<'_, C> {
    fn total(&self, rows: &[u32]) -> C::Acc {
        let mut acc = self.crit.empty();
        for &i in rows {
            self.crit.add(&mut acc, i as usize, self.weights[i as usize]);
        }
        acc
    }

    fn find_split(&mut self, members: &Members, total: &C::Acc, depth: usize) -> Option<Split> {
        let n = members.rows().len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        if self.params.max_depth.is_some_and(|d| depth >= d)
            || n < self.params.min_samples_split.max(2)
            || n < 2 * min_leaf
            || self.crit.is_pure(total)
        {
            return None;
        }
        if self.mtry < self.features.len() {
            self.features.shuffle(self.rng);
        }
        let mut best: Option<Split> = None;
        let mut visited = 0;
        for fi in 0..self.features.len() {
            if visited == self.mtry {
                break;
            }
            let f = self.features[fi];
            let col = &self.data.cols[f];
            let cand = match members {
                Members::Sorted(orders) => {
                    let list = &orders[f];
                    if col[list[0] as usize] == col[list[n - 1] as usize] {
                        continue;
                    }
                    visited += 1;
                    self.best_in_sorted(list, col, total, min_leaf)
                }
                Members::Plain(rows) => {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for &i in rows {
                        lo = lo.min(col[i as usize]);
                        hi = hi.max(col[i as usize]);
                    }
                    if lo == hi {
                        continue;
                    }
                    visited += 1;
                    let mut t = lo + self.rng.random::<f64>() * (hi - lo);
                    if t >= hi {
                        t = lo;
                    }
                    self.score_threshold(rows, col, t, min_leaf).map(|p| (p, t))
                }
            };
            if let Some((proxy, threshold)) = cand {
                if best.as_ref().is_none_or(|b| proxy > b.proxy) {
                    best = Some(Split { proxy, feature: f, threshold });
                }
            }
        }
        best
    }

    fn best_in_sorted(&self, list: &[u32], col: &[f64], total: &C::Acc, min_leaf: usize) -> Option<(f64, f64)> {
        let n = list.len();
        let mut left = self.crit.empty();
        let mut right = total.clone();
        let mut best: Option<(f64, f64)> = None;
        for pos in 0..n - 1 {
            let i = list[pos] as usize;
            let w = self.weights[i];
            self.crit.add(&mut left, i, w);
            self.crit.remove(&mut right, i, w);
            let (v, next) = (col[i], col[list[pos + 1] as usize]);
            if v == next || pos + 1 < min_leaf || n - pos - 1 < min_leaf {
                continue;
            }
            let p = self.crit.proxy(&left) + self.crit.proxy(&right);
            if best.is_none_or(|(bp, _)| p > bp) {
                let mut mid = v + (next - v) / 2.0;
                if !(mid >= v && mid < next) {
                    mid = v;
                }
                best = Some((p, mid));
            }
        }
        best
    }

    fn score_threshold(&self, rows: &[u32], col: &[f64], t: f64, min_leaf: usize) -> Option<f64> {
        let mut left = self.crit.empty();
        let mut right = self.crit.empty();
        let mut n_left = 0;
        for &i in rows {
            let i = i as usize;
            if col[i] <= t {
                self.crit.add(&mut left, i, self.weights[i]);
                n_left += 1;
            } else {
                self.crit.add(&mut right, i, self.weights[i]);
            }
        }
        if n_left < min_leaf || rows.len() - n_left < min_leaf {
            return None;
        }
        Some(self.crit.proxy(&left) + self.crit.proxy(&right))
    }

    fn partition(&mut self, members: Members, s: &Split) -> (Members, Members) {
        let col = &self.data.cols[s.feature];
        for &i in members.rows() {
            self.go_left[i as usize] = col[i as usize] <= s.threshold;
        }
        let go_left = &self.go_left;
        let split = |list: Vec<u32>| -> (Vec<u32>, Vec<u32>) { list.into_iter().partition(|&i| go_left[i as usize]) };
        match members {
            Members::Sorted(orders) => {
                let (l, r): (Vec<_>, Vec<_>) = orders.into_iter().map(split).unzip();
                (Members::Sorted(l), Members::Sorted(r))
            }
            Members::Plain(rows) => {
                let (l, r) = split(rows);
                (Members::Plain(l), Members::Plain(r))
            }
        }
    }
}

/// Training target of a forest.
pub(crate) enum TreeTarget<'a> {
    Classes { labels: &'a [usize], n_classes: usize },
    Values(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub tree: TreeParams,
}

/// An averaged ensemble of trees; a single decision tree is a forest of one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_outputs: usize,
    pub trees: Vec<Tree>,
    /// Normalized impurity-decrease importance per feature.
    pub importance: Vec<f64>,
}

impl Forest {
    /// Trees are grown in parallel; tree `t` draws from stream `t` of `seed`.
    pub(crate) fn fit(x: &Matrix, target: TreeTarget<'_>, params: &ForestParams, names: &[String], seed: u64) -> Self {
        let data = Columns::new(x, params.tree.splitter == Splitter::Best);
        let n = x.n_rows();
        let grow = |t: usize| -> BuildOutput {
            let mut rng = child_rng(seed, t as u64);
            let mut weights = vec![1.0; n];
            if params.bootstrap {
                weights.iter_mut().for_each(|w| *w = 0.0);
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
            }
            match &target {
                TreeTarget::Classes { labels, n_classes } => {
                    build_tree(&Gini { labels, n_classes: *n_classes }, &data, &weights, &params.tree, names, &mut rng)
                }
                TreeTarget::Values(y) => build_tree(&Variance { y }, &data, &weights, &params.tree, names, &mut rng),
            }
        };
        let built: Vec<BuildOutput> = (0..params.n_trees.max(1)).into_par_iter().map(grow).collect();
        let n_outputs = match &target {
            TreeTarget::Classes { n_classes, .. } => *n_classes,
            TreeTarget::Values(_) => 1,
        };
        let mut importance = vec![0.0; x.n_cols()];
        for b in &built {
            for (acc, v) in importance.iter_mut().zip(&b.importance) {
                *acc += v;
            }
        }
        normalize(&mut importance);
        Self { n_outputs, trees: built.into_iter().map(|b| b.tree).collect(), importance }
    }

    /// Mean leaf output per row: class distributions or a single value.
    pub fn predict(&self, x: &Matrix) -> Matrix {
        let rows: Vec<Vec<f64>> = (0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let mut out = vec![0.0; self.n_outputs];
                for t in &self.trees {
                    for (o, v) in out.iter_mut().zip(t.predict_row(row)) {
                        *o += v;
                    }
                }
                let k = self.trees.len() as f64;
                out.iter_mut().for_each(|o| *o /= k);
                out
            })
            .collect();
        Matrix::from_rows(&rows)
    }
}

pub(crate) fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|j| format!("f{j}")).collect()
    }

    /// Gini impurity decrease computed from explicit counts.
    fn gini_gain(labels: &[usize], k: usize, left: &[bool]) -> f64 {
        let imp = |sel: &dyn Fn(usize) -> bool| {
            let mut c = vec![0.0; k];
            let mut n = 0.0;
            for (i, &l) in labels.iter().enumerate() {
                if sel(i) {
                    c[l] += 1.0;
                    n += 1.0;
                }
            }
            if n == 0.0 {
                return 0.0;
            }
            n * (1.0 - c.iter().map(|x| (x / n) * (x / n)).sum::<f64>())
        };
        imp(&|_| true) - imp(&|i| left[i]) - imp(&|i| !left[i])
    }

    #[test]
    fn stump_picks_the_gini_optimal_split() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [2.0, 3.0], [3.0, 4.0], [4.0, 1.0], [5.0, 2.0], [6.0, 6.0]]);
        let labels = [0, 0, 0, 1, 1, 1];
        let data = Columns::new(&x, true);
        let params = TreeParams { max_depth: Some(1), ..Default::default() };
        let out = build_tree(&Gini { labels: &labels, n_classes: 2 }, &data, &[1.0; 6], &params, &names(2), &mut rng_from_seed(0));
        match &out.tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 3.5);
            }
            n => panic!("{n:?}"),
        }
        // Brute force over every threshold of every feature.
        let mut best = 0.0f64;
        for f in 0..2 {
            for t in x.column(f) {
                let left: Vec<bool> = (0..6).map(|i| x.get(i, f) <= t).collect();
                best = best.max(gini_gain(&labels, 2, &left));
            }
        }
        let total: f64 = out.importance.iter().sum();
        assert!((total - best).abs() < 1e-12);
    }

    #[test]
    fn unlimited_tree_memorizes_distinct_rows() {
        let mut rng = rng_from_seed(3);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let labels: Vec<usize> = (0..200).map(|i| (i * 7 + i / 3) % 4).collect();
        let x = Matrix::from_rows(&rows);
        for splitter in [Splitter::Best, Splitter::Random] {
            let p = ForestParams { n_trees: 1, bootstrap: false, tree: TreeParams { splitter, ..Default::default() } };
            let f = Forest::fit(&x, TreeTarget::Classes { labels: &labels, n_classes: 4 }, &p, &names(3), 1);
            let pr = f.predict(&x);
            for (i, &l) in labels.iter().enumerate() {
                assert_eq!(pr.get(i, l), 1.0, "{splitter:?} row {i}");
            }
        }
    }

    #[test]
    fn regression_tree_fits_step() {
        let rows: Vec<[f64; 1]> = (0..40).map(|i| [i as f64]).collect();
        let y: Vec<f64> = (0..40).map(|i| if i < 17 { 2.0 } else { -1.0 }).collect();
        let x = Matrix::from_rows(&rows);
        let p = ForestParams { n_trees: 1, bootstrap: false, tree: TreeParams { max_depth: Some(1), ..Default::default() } };
        let f = Forest::fit(&x, TreeTarget::Values(&y), &p, &names(1), 0);
        assert_eq!(f.trees[0].nodes.len(), 3);
        let pr = f.predict(&x);
        for i in 0..40 {
            assert_eq!(pr.get(i, 0), y[i]);
        }
    }

    #[test]
    fn min_samples_leaf_respected() {
        let rows: Vec<[f64; 1]> = (0..30).map(|i| [i as f64]).collect();
        let labels: Vec<usize> = (0..30).map(|i| usize::from(i == 0)).collect();
        let x = Matrix::from_rows(&rows);
        let data = Columns::new(&x, true);
        let params = TreeParams { min_samples_leaf: 5, ..Default::default() };
        let out = build_tree(&Gini { labels: &labels, n_classes: 2 }, &data, &[1.0; 30], &params, &names(1), &mut rng_from_seed(0));
        assert!(out.leaves.iter().all(|(_, rows)| rows.len() >= 5));
    }

    #[test]
    fn forest_is_seed_deterministic_and_parallel_safe() {
        let mut rng = rng_from_seed(9);
        let rows: Vec<Vec<f64>> = (0..150).map(|_| (0..6).map(|_| rng.random::<f64>()).collect()).collect();
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] + r[1] > 1.0)).collect();
        let x = Matrix::from_rows(&rows);
        let p = ForestParams {
            n_trees: 20,
            bootstrap: true,
            tree: TreeParams { max_features: MaxFeatures::Sqrt, ..Default::default() },
        };
        let a = Forest::fit(&x, TreeTarget::Classes { labels: &labels, n_classes: 2 }, &p, &names(6), 5);
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| Forest::fit(&x, TreeTarget::Classes { labels: &labels, n_classes: 2 }, &p, &names(6), 5));
        assert_eq!(a, b);
        let c = Forest::fit(&x, TreeTarget::Classes { labels: &labels, n_classes: 2 }, &p, &names(6), 6);
        assert_ne!(a, c);
        assert!((a.importance.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(a.importance[0] > a.importance[5] && a.importance[1] > a.importance[4]);
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(51), 7);
        assert_eq!(MaxFeatures::Log2.resolve(51), 5);
        assert_eq!(MaxFeatures::Count(80).resolve(51), 51);
        assert_eq!(MaxFeatures::Fraction(0.5).resolve(51), 25);
        assert_eq!(MaxFeatures::from_value(&serde_json::json!("sqrt")).unwrap(), MaxFeatures::Sqrt);
        assert_eq!(MaxFeatures::from_value(&serde_json::json!(3)).unwrap(), MaxFeatures::Count(3));
        assert_eq!(MaxFeatures::from_value(&serde_json::json!(0.3)).unwrap(), MaxFeatures::Fraction(0.3));
        assert!(MaxFeatures::from_value(&serde_json::json!(0)).is_err());
    }
}
