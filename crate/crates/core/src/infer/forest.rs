use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BinaryDecision;
use crate::error::{domain, Error, Result};
use crate::ops::OpCounters;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    /// Go to `left` when `x[feature] <= threshold`.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Class distribution; index 1 is the positive class.
    Leaf { distribution: Vec<f64> },
}

/// Binary decision tree stored as a node array rooted at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf(p_positive: f64) -> Self {
        DecisionTree { nodes: vec![TreeNode::Leaf { distribution: vec![1.0 - p_positive, p_positive] }] }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::Config("empty tree".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                TreeNode::Split { left, right, threshold, .. } => {
                    if *left >= self.nodes.len() || *right >= self.nodes.len() || *left <= i || *right <= i {
                        return Err(Error::Config(format!("node {i} has invalid children")));
                    }
                    if !threshold.is_finite() {
                        return Err(Error::Config(format!("node {i} has a non-finite threshold")));
                    }
                }
                TreeNode::Leaf { distribution } => {
                    let s: f64 = distribution.iter().sum();
                    if distribution.is_empty() || distribution.iter().any(|p| *p < 0.0) || (s - 1.0).abs() > 1e-6 {
                        return Err(Error::Config(format!("leaf {i} distribution does not sum to 1")));
                    }
                }
            }
        }
        Ok(())
    }

    fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }

    /// Positive-class probability of the leaf reached by `x`.
    pub fn positive_probability<S: Scalar>(&self, x: &[S], ops: &mut OpCounters) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Split { feature, threshold, left, right } => {
                    ops.branch(1);
                    ops.mem(3);
                    i = if x[*feature].to_f64() <= *threshold { *left } else { *right };
                }
                TreeNode::Leaf { distribution } => return distribution.get(1).copied().unwrap_or(0.0),
            }
        }
    }

    /// Full tree of the given depth over `n_features` with thresholds drawn
    /// from `[-1, 1]`.
    pub fn random<R: Rng>(rng: &mut R, depth: usize, n_features: usize) -> Self {
        let mut nodes = Vec::new();
        fn grow<R: Rng>(rng: &mut R, nodes: &mut Vec<TreeNode>, depth: usize, n_features: usize) -> usize {
            let id = nodes.len();
            if depth == 0 {
                let p: f64 = rng.random_range(0.0..=1.0);
                nodes.push(TreeNode::Leaf { distribution: vec![1.0 - p, p] });
                return id;
            }
            nodes.push(TreeNode::Leaf { distribution: vec![] });
            let feature = rng.random_range(0..n_features);
            let threshold = rng.random_range(-1.0..1.0);
            let left = grow(rng, nodes, depth - 1, n_features);
            let right = grow(rng, nodes, depth - 1, n_features);
            nodes[id] = TreeNode::Split { feature, threshold, left, right };
            id
        }
        grow(rng, &mut nodes, depth, n_features);
        DecisionTree { nodes }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::Config("forest has no trees".into()));
        }
        self.trees.iter().try_for_each(DecisionTree::validate)
    }

    /// Number of features the trees read.
    pub fn required_features(&self) -> usize {
        self.trees.iter().filter_map(DecisionTree::max_feature).max().map_or(0, |m| m + 1)
    }

    pub fn random<R: Rng>(rng: &mut R, n_trees: usize, depth: usize, n_features: usize) -> Self {
        ForestModel { trees: (0..n_trees).map(|_| DecisionTree::random(rng, depth, n_features)).collect() }
    }
}

/// Mean positive-class leaf probability; positive iff above one half.
pub fn forest_predict<S: Scalar>(model: &ForestModel, x: &[S], ops: &mut OpCounters) -> Result<BinaryDecision> {
    let need = model.required_features();
    if x.len() < need {
        return domain(format!("forest reads feature {} but only {} given", need - 1, x.len()));
    }
    if model.trees.is_empty() {
        return domain("forest has no trees");
    }
    let sum: f64 = model.trees.iter().map(|t| t.positive_probability(x, ops)).sum();
    let p = sum / model.trees.len() as f64;
    ops.branch(1);
    Ok(BinaryDecision { score: p, positive: p > 0.5 })
}
