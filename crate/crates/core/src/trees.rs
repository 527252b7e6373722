//! Entropy decision trees and a bootstrap random forest.
//!
//! Splits are axis-aligned: a sample goes left when `x[feature] <= threshold`.
//! Thresholds are midpoints between consecutive distinct values of a feature.
//! Among splits with equal gain the lowest feature index wins, then the lowest
//! threshold.
//!
//! Forest tree `t` is seeded with `seed::mix(seed, t)`, so a forest is
//! identical whether its trees are grown sequentially or in parallel.

use ndarray::{ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

/// Splits must improve entropy by more than this to be taken.
pub const MIN_GAIN: f64 = 1e-12;

/// Gains closer than this are ties and resolved by enumeration order.
pub const GAIN_TIE_EPS: f64 = 1e-12;

pub const DEFAULT_N_ESTIMATORS: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub max_features: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 100,
            min_samples_split: 100,
            max_features: 5,
        }
    }
}

impl TreeParams {
    fn validate(&self, n_features: usize) -> Result<()> {
        if self.max_depth == 0 || self.min_samples_split == 0 {
            return Err(Error::InvalidParam(
                "max_depth and min_samples_split must be positive".into(),
            ));
        }
        if self.max_features == 0 || self.max_features > n_features {
            return Err(Error::InvalidParam(format!(
                "max_features {} outside 1..={n_features}",
                self.max_features
            )));
        }
        Ok(())
    }
}

/// A tree node. Serializes as `{feature, threshold, left, right}` or
/// `{p_up, n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf {
        p_up: f64,
        n: usize,
    },
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }
}

/// Binary entropy in bits of a node with `pos` positives out of `n`.
pub fn entropy(pos: usize, n: usize) -> f64 {
    if n == 0 || pos == 0 || pos == n {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    let q = 1.0 - p;
    -p * p.log2() - q * q.log2()
}

/// Entropy impurity of a label multiset.
pub fn impurity(labels: &[u8]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("impurity of zero labels"));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    Ok(entropy(pos, labels.len()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Midpoint of two distinct sorted values that still sends `lo` left and
/// `hi` right.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = (lo + hi) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

/// Best entropy split of all rows of `x` over `candidate_features`.
pub fn best_split(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    candidate_features: &[usize],
) -> Option<SplitChoice> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    best_split_rows(x, y, &rows, candidate_features)
}

/// Best split over a row multiset. Repeated row indices count repeatedly.
fn best_split_rows(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    rows: &[usize],
    candidate_features: &[usize],
) -> Option<SplitChoice> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let total_pos = rows.iter().filter(|&&r| y[r] == 1).count();
    let parent = entropy(total_pos, n);
    if parent == 0.0 {
        return None;
    }

    let mut features = candidate_features.to_vec();
    features.sort_unstable();
    features.dedup();

    let mut best: Option<SplitChoice> = None;
    let mut order = rows.to_vec();
    for &f in &features {
        order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]));
        let mut left_pos = 0;
        for i in 0..n - 1 {
            left_pos += usize::from(y[order[i]] == 1);
            let (lo, hi) = (x[[order[i], f]], x[[order[i + 1], f]]);
            if lo >= hi {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            let gain = parent
                - (n_left as f64 / n as f64) * entropy(left_pos, n_left)
                - (n_right as f64 / n as f64) * entropy(total_pos - left_pos, n_right);
            let better = match best {
                None => gain > MIN_GAIN,
                Some(b) => gain > b.gain + GAIN_TIE_EPS,
            };
            if better {
                best = Some(SplitChoice {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    gain,
                });
            }
        }
    }
    best
}

/// Draws a fresh subset of candidate features at every node.
#[derive(Debug, Clone)]
pub struct FeatureSampler {
    rng: ChaCha8Rng,
    max_features: usize,
}

impl FeatureSampler {
    pub fn new(seed: u64, max_features: usize) -> Self {
        FeatureSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_features,
        }
    }

    /// `max_features` distinct indices from `0..n_features`, ascending.
    pub fn draw(&mut self, n_features: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..n_features).collect();
        if self.max_features >= n_features {
            return pool;
        }
        for i in 0..self.max_features {
            let j = i + self.rng.gen_range(0..(n_features - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(self.max_features);
        pool.sort_unstable();
        pool
    }
}

/// Grows a tree on every row of `x`.
///
/// Without a sampler every node searches all features.
pub fn fit_tree(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    params: &TreeParams,
    sampler: Option<&mut FeatureSampler>,
) -> Result<Node> {
    let rows: Vec<usize> = (0..x.nrows()).collect();
    fit_tree_rows(x, y, &rows, params, sampler)
}

fn fit_tree_rows(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    rows: &[usize],
    params: &TreeParams,
    mut sampler: Option<&mut FeatureSampler>,
) -> Result<Node> {
    if x.nrows() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows vs {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if rows.is_empty() {
        return Err(Error::Empty("tree fit on zero rows"));
    }
    params.validate(x.ncols())?;
    Ok(grow(x, y, rows.to_vec(), 0, params, &mut sampler))
}

fn grow(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    rows: Vec<usize>,
    depth: usize,
    params: &TreeParams,
    sampler: &mut Option<&mut FeatureSampler>,
) -> Node {
    let n = rows.len();
    let pos = rows.iter().filter(|&&r| y[r] == 1).count();
    let leaf = Node::Leaf {
        p_up: pos as f64 / n as f64,
        n,
    };
    if depth >= params.max_depth || n < params.min_samples_split || pos == 0 || pos == n {
        return leaf;
    }
    let candidates = match sampler {
        Some(s) => s.draw(x.ncols()),
        None => (0..x.ncols()).collect(),
    };
    let Some(choice) = best_split_rows(x, y, &rows, &candidates) else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| x[[r, choice.feature]] <= choice.threshold);
    Node::Split {
        feature: choice.feature,
        threshold: choice.threshold,
        left: Box::new(grow(x, y, left, depth + 1, params, sampler)),
        right: Box::new(grow(x, y, right, depth + 1, params, sampler)),
    }
}

/// Leaf probability reached by `x`.
pub fn predict_tree(root: &Node, x: ArrayView1<'_, f64>) -> f64 {
    let mut node = root;
    loop {
        match node {
            Node::Leaf { p_up, .. } => return *p_up,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                node = if x[*feature] <= *threshold {
                    left
                } else {
                    right
                }
            }
        }
    }
}

/// A standalone decision tree: no bootstrap, every feature at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub params: TreeParams,
    pub root: Node,
}

impl TreeModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: TreeParams) -> Result<Self> {
        let root = fit_tree(x, y, &params, None)?;
        Ok(TreeModel { params, root })
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| predict_tree(&self.root, r))
            .collect()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<u8> {
        crate::logistic::threshold(&self.predict_proba(x))
    }
}

/// `n` uniform draws with replacement from `0..n`.
pub fn bootstrap_sample(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| rng.gen_range(0..n as u64) as usize)
        .collect()
}

/// How each forest tree picks its training rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bootstrap {
    #[default]
    Resample,
    /// Every tree sees each row exactly once.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub params: TreeParams,
    pub seed: u64,
    pub bootstrap: Bootstrap,
    /// Grow trees on the rayon pool. Output does not depend on this.
    pub parallel: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: DEFAULT_N_ESTIMATORS,
            params: TreeParams::default(),
            seed: 0,
            bootstrap: Bootstrap::Resample,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_estimators: usize,
    pub seed: u64,
    pub params: TreeParams,
    /// `None` when no sample was ever out of bag.
    pub oob_error: Option<f64>,
    pub trees: Vec<Node>,
    /// Row multiset each tree was grown on. Not serialized.
    #[serde(skip)]
    pub bootstrap_indices: Vec<Vec<usize>>,
}

/// Per-tree seeds: stream 0 feeds the bootstrap, stream 1 the feature sampler.
fn tree_seeds(master: u64, t: usize) -> (u64, u64) {
    let s = seed::mix(master, t as u64);
    (seed::mix(s, 0), seed::mix(s, 1))
}

/// Forest with default bootstrap resampling.
pub fn fit_forest(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    n_estimators: usize,
    params: TreeParams,
    seed: u64,
) -> Result<ForestModel> {
    fit_forest_with(
        x,
        y,
        &ForestConfig {
            n_estimators,
            params,
            seed,
            ..ForestConfig::default()
        },
    )
}

pub fn fit_forest_with(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    config: &ForestConfig,
) -> Result<ForestModel> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Empty("forest needs at least 2 rows"));
    }
    if n != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{n} rows vs {} labels",
            y.len()
        )));
    }
    if config.n_estimators == 0 {
        return Err(Error::InvalidParam("n_estimators must be positive".into()));
    }
    config.params.validate(x.ncols())?;

    let build = |t: usize| -> Result<(Node, Vec<usize>)> {
        let (boot_seed, feature_seed) = tree_seeds(config.seed, t);
        let rows = match config.bootstrap {
            Bootstrap::Resample => bootstrap_sample(n, boot_seed),
            Bootstrap::Identity => (0..n).collect(),
        };
        let mut sampler = FeatureSampler::new(feature_seed, config.params.max_features);
        let tree = fit_tree_rows(x, y, &rows, &config.params, Some(&mut sampler))?;
        Ok((tree, rows))
    };

    let built: Vec<(Node, Vec<usize>)> = if config.parallel {
        build_parallel(config.n_estimators, &build)?
    } else {
        (0..config.n_estimators).map(build).collect::<Result<_>>()?
    };
    let (trees, bootstrap_indices) = built.into_iter().unzip();
    let mut forest = ForestModel {
        n_estimators: config.n_estimators,
        seed: config.seed,
        params: config.params,
        oob_error: None,
        trees,
        bootstrap_indices,
    };
    forest.oob_error = match oob_error(&forest, x, y) {
        Ok(e) => Some(e),
        Err(Error::NoOobSamples) => None,
        Err(e) => return Err(e),
    };
    Ok(forest)
}

#[cfg(feature = "parallel")]
fn build_parallel<F>(n: usize, build: &F) -> Result<Vec<(Node, Vec<usize>)>>
where
    F: Fn(usize) -> Result<(Node, Vec<usize>)> + Sync,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(build).collect()
}

#[cfg(not(feature = "parallel"))]
fn build_parallel<F>(n: usize, build: &F) -> Result<Vec<(Node, Vec<usize>)>>
where
    F: Fn(usize) -> Result<(Node, Vec<usize>)>,
{
    (0..n).map(build).collect()
}

/// Misclassification rate of each training row under the trees whose
/// bootstrap left it out. Rows that were in every bootstrap are skipped.
pub fn oob_error(forest: &ForestModel, x: ArrayView2<'_, f64>, y: &[u8]) -> Result<f64> {
    let n = x.nrows();
    if forest.bootstrap_indices.len() != forest.trees.len() {
        return Err(Error::InvalidParam(
            "forest carries no bootstrap indices".into(),
        ));
    }
    let mut sum = vec![0.0f64; n];
    let mut votes = vec![0usize; n];
    let mut in_bag = vec![false; n];
    for (tree, rows) in forest.trees.iter().zip(&forest.bootstrap_indices) {
        in_bag.fill(false);
        for &r in rows {
            in_bag[r] = true;
        }
        for i in (0..n).filter(|&i| !in_bag[i]) {
            sum[i] += predict_tree(tree, x.row(i));
            votes[i] += 1;
        }
    }
    let mut evaluated = 0usize;
    let mut wrong = 0usize;
    for i in (0..n).filter(|&i| votes[i] > 0) {
        evaluated += 1;
        let class = u8::from(sum[i] / votes[i] as f64 >= 0.5);
        wrong += usize::from(class != y[i]);
    }
    if evaluated == 0 {
        return Err(Error::NoOobSamples);
    }
    Ok(wrong as f64 / evaluated as f64)
}

impl ForestModel {
    /// Mean leaf probability over trees, accumulated in tree order.
    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                let total: f64 = self.trees.iter().map(|t| predict_tree(t, row)).sum();
                total / self.trees.len() as f64
            })
            .collect()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<u8> {
        crate::logistic::threshold(&self.predict_proba(x))
    }
}

/// Class predictions of a forest: 1 when the mean `p_up` is at least 0.5.
pub fn predict_forest(forest: &ForestModel, x: ArrayView2<'_, f64>) -> Vec<u8> {
    forest.predict(x)
}
