//! CART classification trees on weighted Gini impurity, and bagged forests.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_single_inputs, SingleOutputModel};
use crate::error::{Error, Result};

/// Gini impurity `1 - p0^2 - p1^2` of a node with the given class weights.
pub fn weighted_gini(w0: f64, w1: f64) -> f64 {
    let total = w0 + w1;
    if total <= 0.0 {
        return 0.0;
    }
    let (p0, p1) = (w0 / total, w1 / total);
    1.0 - p0 * p0 - p1 * p1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    All,
    /// `ceil(sqrt(p))` candidate features per split.
    Sqrt,
}

impl FeatureSubset {
    fn count(self, p: usize) -> usize {
        match self {
            FeatureSubset::All => p,
            FeatureSubset::Sqrt => ((p as f64).sqrt().ceil() as usize).clamp(1, p.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub features: FeatureSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        p: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub params: TreeParams,
    pub seed: u64,
    nodes: Vec<Node>,
}

struct Builder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    w: &'a [f64],
    params: &'a TreeParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn class_weights(&self, idx: &[usize]) -> (f64, f64) {
        idx.iter().fold((0.0, 0.0), |(a, b), &i| {
            if self.y[i] == 1 {
                (a, b + self.w[i])
            } else {
                (a + self.w[i], b)
            }
        })
    }

    /// Best `(feature, threshold, weighted child impurity)` over candidate features.
    fn best_split(&mut self, idx: &[usize], w0: f64, w1: f64) -> Option<(usize, f64, f64)> {
        let p = self.x.ncols();
        let k = self.params.features.count(p);
        let mut candidates: Vec<usize> = if k >= p {
            (0..p).collect()
        } else {
            sample(&mut self.rng, p, k).into_vec()
        };
        candidates.sort_unstable();
        let total = w0 + w1;
        let parent = weighted_gini(w0, w1) * total;
        let mut best: Option<(usize, f64, f64)> = None;
        let mut order = idx.to_vec();
        for &f in &candidates {
            order.sort_by(|&a, &b| self.x[[a, f]].total_cmp(&self.x[[b, f]]).then(a.cmp(&b)));
            let (mut l0, mut l1) = (0.0, 0.0);
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                if self.y[i] == 1 {
                    l1 += self.w[i];
                } else {
                    l0 += self.w[i];
                }
                let (a, b) = (self.x[[i, f]], self.x[[order[pos + 1], f]]);
                if a == b {
                    continue;
                }
                let (r0, r1) = (w0 - l0, w1 - l1);
                let cost = weighted_gini(l0, l1) * (l0 + l1) + weighted_gini(r0, r1) * (r0 + r1);
                if cost < parent - 1e-12 && best.is_none_or(|(_, _, c)| cost < c) {
                    best = Some((f, a + (b - a) / 2.0, cost));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let (w0, w1) = self.class_weights(&idx);
        let id = self.nodes.len();
        let leaf_p = if w0 + w1 > 0.0 { w1 / (w0 + w1) } else { 0.0 };
        self.nodes.push(Node::Leaf { p: leaf_p });
        if depth >= self.params.max_depth || w0 == 0.0 || w1 == 0.0 || idx.len() < 2 {
            return id;
        }
        let Some((feature, threshold, _)) = self.best_split(&idx, w0, w1) else {
            return id;
        };
        let (li, ri): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.x[[i, feature]] <= threshold);
        let left = self.grow(li, depth + 1);
        let right = self.grow(ri, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    pub fn new(params: TreeParams, seed: u64) -> Self {
        Self {
            params,
            seed,
            nodes: Vec::new(),
        }
    }

    /// Number of split nodes.
    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }

    /// `(feature, threshold)` of the root split, if any.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }

    fn fit_with_rng(&mut self, x: ArrayView2<'_, f64>, y: &[u8], w: &[f64], rng: ChaCha8Rng) {
        // rows with zero weight carry no information and must not create thresholds
        let idx: Vec<usize> = (0..x.nrows()).filter(|&i| w[i] > 0.0).collect();
        let mut b = Builder {
            x,
            y,
            w,
            params: &self.params,
            rng,
            nodes: Vec::new(),
        };
        b.grow(idx, 0);
        self.nodes = b.nodes;
    }
}

impl SingleOutputModel for DecisionTree {
    fn fit(&mut self, x: ArrayView2<'_, f64>, y: &[u8], weights: &[f64]) -> Result<()> {
        check_single_inputs(x, y, weights)?;
        if self.params.max_depth == 0 {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        self.fit_with_rng(x, y, weights, ChaCha8Rng::seed_from_u64(self.seed));
        Ok(())
    }

    /// # Panics
    /// If the tree was never fitted.
    fn predict_proba(&self, x: &[f64]) -> f64 {
        assert!(!self.nodes.is_empty(), "decision tree must be fitted first");
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { p } => return *p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_trees: usize,
    pub params: TreeParams,
    pub bootstrap: bool,
    pub seed: u64,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn new(n_trees: usize, max_depth: usize, seed: u64) -> Self {
        Self {
            n_trees,
            params: TreeParams {
                max_depth,
                features: FeatureSubset::Sqrt,
            },
            bootstrap: true,
            seed,
            trees: Vec::new(),
        }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

impl SingleOutputModel for RandomForest {
    fn fit(&mut self, x: ArrayView2<'_, f64>, y: &[u8], weights: &[f64]) -> Result<()> {
        check_single_inputs(x, y, weights)?;
        if self.n_trees == 0 || self.params.max_depth == 0 {
            return Err(Error::Config("forest needs n_trees >= 1 and max_depth >= 1".into()));
        }
        let n = x.nrows();
        self.trees = (0..self.n_trees)
            .map(|t| {
                // one stream per tree: bootstrap draws, then feature sampling
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(t as u64);
                let w: Vec<f64> = if self.bootstrap {
                    let mut counts = vec![0u32; n];
                    for _ in 0..n {
                        counts[rng.random_range(0..n)] += 1;
                    }
                    counts.iter().zip(weights).map(|(&c, &w)| c as f64 * w).collect()
                } else {
                    weights.to_vec()
                };
                let mut tree = DecisionTree::new(self.params.clone(), self.seed);
                tree.fit_with_rng(x, y, &w, rng);
                tree
            })
            .collect();
        Ok(())
    }

    fn predict_proba(&self, x: &[f64]) -> f64 {
        assert!(!self.trees.is_empty(), "random forest must be fitted first");
        self.trees.iter().map(|t| t.predict_proba(x)).sum::<f64>() / self.trees.len() as f64
    }
}
