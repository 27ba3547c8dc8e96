//! Bagged CART trees with Gini splits and per-node feature subsampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::pose::ShotLabel;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `⌊√F⌋`.
    pub max_features: Option<usize>,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 200,
            max_features: None,
            max_depth: None,
            bootstrap: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TreeNode {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Fraction of High samples that reached the leaf.
    Leaf { high_fraction: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Self {
        DecisionTree { nodes }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaf_fraction(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { high_fraction } => return high_fraction,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// 1 for High, 0 for Low, ½ on an evenly split leaf.
    pub fn vote(&self, x: &[f64]) -> f64 {
        let f = self.leaf_fraction(x);
        if f > 0.5 {
            1.0
        } else if f < 0.5 {
            0.0
        } else {
            0.5
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_features: usize,
}

impl RandomForest {
    pub fn from_trees(trees: Vec<DecisionTree>, n_features: usize) -> Self {
        RandomForest { trees, n_features }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Fraction of trees voting High.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let votes: f64 = self.trees.iter().map(|t| t.vote(x)).sum();
        votes / self.trees.len() as f64
    }

    pub fn fit(
        x: &[Vec<f64>],
        y: &[ShotLabel],
        config: &ForestConfig,
        seed: u64,
    ) -> Result<Self, ClassifierError> {
        let n_features = x.first().map_or(0, Vec::len);
        if x.len() != y.len() || x.iter().any(|r| r.len() != n_features) || n_features == 0 {
            return Err(ClassifierError::ConfigMismatch("ragged forest training matrix".into()));
        }
        let highs = y.iter().filter(|l| l.is_high()).count();
        if highs == 0 || highs == y.len() {
            return Err(ClassifierError::SingleClassTraining);
        }
        let mtry = config
            .max_features
            .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
            .clamp(1, n_features);
        let n_trees = config.n_trees.max(1);
        let trees = (0..n_trees)
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed::derive_index(seed, t as u64));
                let sample: Vec<usize> = if config.bootstrap {
                    (0..x.len()).map(|_| rng.random_range(0..x.len())).collect()
                } else {
                    (0..x.len()).collect()
                };
                let mut builder = TreeBuilder {
                    x,
                    y,
                    mtry,
                    max_depth: config.max_depth,
                    rng,
                    nodes: Vec::new(),
                };
                builder.grow(sample, 0);
                DecisionTree { nodes: builder.nodes }
            })
            .collect();
        Ok(RandomForest { trees, n_features })
    }
}

fn gini(high: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = high as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [ShotLabel],
    mtry: usize,
    max_depth: Option<usize>,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl TreeBuilder<'_> {
    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let high = samples.iter().filter(|&&i| self.y[i].is_high()).count();
        let n = samples.len();
        self.nodes.push(TreeNode::Leaf {
            high_fraction: high as f64 / n as f64,
        });
        let pure = high == 0 || high == n;
        if pure || n < 2 || self.max_depth.is_some_and(|d| depth >= d) {
            return id;
        }
        let Some(best) = self.best_split(&samples) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| self.x[i][best.feature] <= best.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Tries `mtry` random features; if none of them can split the node,
    /// keeps drawing from the rest until one can.
    fn best_split(&mut self, samples: &[usize]) -> Option<Candidate> {
        let n_features = self.x[0].len();
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(&mut self.rng);
        let mut best: Option<Candidate> = None;
        let mut pairs: Vec<(f64, bool)> = Vec::with_capacity(samples.len());
        for (tried, &feature) in order.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            pairs.clear();
            pairs.extend(samples.iter().map(|&i| (self.x[i][feature], self.y[i].is_high())));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let n = pairs.len();
            let total_high = pairs.iter().filter(|p| p.1).count();
            let mut left_high = 0;
            for i in 1..n {
                if pairs[i - 1].1 {
                    left_high += 1;
                }
                let (lo, hi) = (pairs[i - 1].0, pairs[i].0);
                if hi <= lo {
                    continue;
                }
                let score = i as f64 * gini(left_high, i) + (n - i) as f64 * gini(total_high - left_high, n - i);
                if best.as_ref().is_none_or(|b| score < b.score) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Candidate {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<ShotLabel>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let high = i % 2 == 0;
            let scale = if high { 2.0 } else { 1.0 };
            x.push(vec![scale * rng.random_range(0.8..1.2), scale * rng.random_range(0.8..1.2)]);
            y.push(if high { ShotLabel::High } else { ShotLabel::Low });
        }
        (x, y)
    }

    #[test]
    fn separable_training_accuracy() {
        let (x, y) = toy(60, 1);
        let f = RandomForest::fit(&x, &y, &ForestConfig::default(), 9).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let p = f.predict_proba(xi);
            assert_eq!(p >= 0.5, yi.is_high());
        }
    }

    #[test]
    fn single_class_rejected() {
        let x = vec![vec![1.0], vec![2.0]];
        let y = vec![ShotLabel::High; 2];
        assert_eq!(
            RandomForest::fit(&x, &y, &ForestConfig::default(), 0),
            Err(ClassifierError::SingleClassTraining)
        );
    }

    #[test]
    fn unanimous_forest() {
        let tree = DecisionTree::from_nodes(vec![TreeNode::Leaf { high_fraction: 1.0 }]);
        let f = RandomForest::from_trees(vec![tree; 7], 1);
        assert_eq!(f.predict_proba(&[0.0]), 1.0);
    }

    #[test]
    fn duplicated_training_set_keeps_predictions() {
        let (x, y) = toy(40, 2);
        let (xt, _) = toy(40, 3);
        let cfg = ForestConfig::default();
        let a = RandomForest::fit(&x, &y, &cfg, 5).unwrap();
        let x2: Vec<_> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<_> = y.iter().chain(&y).copied().collect();
        let b = RandomForest::fit(&x2, &y2, &cfg, 5).unwrap();
        for xi in &xt {
            assert_eq!(a.predict_proba(xi) >= 0.5, b.predict_proba(xi) >= 0.5);
        }
    }

    #[test]
    fn label_swap_mirrors_probabilities() {
        let (x, y) = toy(50, 4);
        let (xt, _) = toy(30, 8);
        let cfg = ForestConfig {
            n_trees: 31,
            ..Default::default()
        };
        let a = RandomForest::fit(&x, &y, &cfg, 11).unwrap();
        let flipped: Vec<_> = y.iter().map(|l| l.flipped()).collect();
        let b = RandomForest::fit(&x, &flipped, &cfg, 11).unwrap();
        for xi in xt.iter().chain(&x) {
            assert_eq!(a.predict_proba(xi), 1.0 - b.predict_proba(xi));
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = toy(50, 6);
        let cfg = ForestConfig::default();
        assert_eq!(
            RandomForest::fit(&x, &y, &cfg, 3).unwrap(),
            RandomForest::fit(&x, &y, &cfg, 3).unwrap()
        );
    }
}
