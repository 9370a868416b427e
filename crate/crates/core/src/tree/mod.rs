//! M5-style model trees: binary splits chosen by standard-deviation
//! reduction, linear models in the leaves, error-based pruning, and
//! prediction smoothing along the root-to-leaf path.
//!
//! Leaves of the unpruned tree regress on every candidate feature. Each
//! internal node also carries a model over the features tested in its
//! subtree; that model is used for smoothing and becomes the leaf model when
//! pruning collapses the node.

mod prune;
mod split;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linear::{fit_least_squares, predict_linear, LinearModel};
use crate::predictor::{FeatureMap, Predictor};

pub use prune::{estimated_error, prune, PRUNING_PENALTY};
pub use split::{best_split, sdr, standard_deviation, SplitCandidate};

pub(crate) use split::best_split_rows;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Minimum rows on each side of a split; nodes with fewer than twice
    /// this many rows become leaves.
    pub min_split: usize,
    /// Stop splitting once a node's target sd falls below this fraction of
    /// the root's.
    pub sd_threshold_fraction: f64,
    pub smoothing_k: f64,
    pub prune: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { min_split: 4, sd_threshold_fraction: 0.05, smoothing_k: 15.0, prune: true }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_split < 2 {
            return Err(Error::InvalidParameter(format!("min_split must be at least 2, got {}", self.min_split)));
        }
        if !(self.sd_threshold_fraction >= 0.0 && self.sd_threshold_fraction.is_finite()) {
            return Err(Error::InvalidParameter(format!("sd threshold fraction {}", self.sd_threshold_fraction)));
        }
        if !(self.smoothing_k >= 0.0 && self.smoothing_k.is_finite()) {
            return Err(Error::InvalidParameter(format!("smoothing k {}", self.smoothing_k)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: String,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
        /// Node-level model used for smoothing and pruning.
        model: LinearModel,
        n: usize,
    },
    Leaf {
        model: LinearModel,
        n: usize,
    },
}

impl TreeNode {
    pub fn n(&self) -> usize {
        match self {
            TreeNode::Split { n, .. } | TreeNode::Leaf { n, .. } => *n,
        }
    }

    pub fn model(&self) -> &LinearModel {
        match self {
            TreeNode::Split { model, .. } | TreeNode::Leaf { model, .. } => model,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a LinearModel>) {
        match self {
            TreeNode::Leaf { model, .. } => out.push(model),
            TreeNode::Split { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }
}

/// A fitted model tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTree {
    pub params: TreeParams,
    pub smoothed: bool,
    pub root: TreeNode,
}

impl ModelTree {
    /// Leaf models left to right.
    pub fn leaf_models(&self) -> Vec<&LinearModel> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn with_smoothing(mut self, smoothed: bool) -> Self {
        self.smoothed = smoothed;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tree serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Grows a tree on `d`, fits node models, then prunes when `params.prune`.
/// The returned tree has smoothing switched on.
pub fn build_tree(d: &Dataset, params: &TreeParams) -> Result<ModelTree> {
    params.validate()?;
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let rows: Vec<usize> = (0..d.len()).collect();
    let root_sd = standard_deviation(d.targets())?;
    let all_columns: Vec<usize> = (0..d.num_features()).collect();
    let grower = Grower { d, params, stop_sd: params.sd_threshold_fraction * root_sd, all_columns: &all_columns };
    let (root, _) = grower.grow(&rows)?;
    let tree = ModelTree { params: *params, smoothed: true, root };
    if params.prune {
        prune(&tree, d)
    } else {
        Ok(tree)
    }
}

struct Grower<'a> {
    d: &'a Dataset,
    params: &'a TreeParams,
    stop_sd: f64,
    all_columns: &'a [usize],
}

impl Grower<'_> {
    /// Returns the subtree and the set of columns tested inside it.
    fn grow(&self, rows: &[usize]) -> Result<(TreeNode, BTreeSet<usize>)> {
        let n = rows.len();
        let targets: Vec<f64> = rows.iter().map(|&i| self.d.targets()[i]).collect();
        let sd = standard_deviation(&targets)?;
        let split = if n < 2 * self.params.min_split || sd < self.stop_sd {
            None
        } else {
            best_split_rows(self.d, rows, self.params.min_split)
        };
        let Some(split) = split else {
            let (model, _) = fit_least_squares(self.d, rows, self.all_columns)?;
            return Ok((TreeNode::Leaf { model, n }, BTreeSet::new()));
        };

        let j = self.d.feature_index(&split.feature).expect("split feature exists");
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.d.row(i)[j] <= split.threshold);
        let (left, mut tested) = self.grow(&left_rows)?;
        let (right, right_tested) = self.grow(&right_rows)?;
        tested.extend(right_tested);
        tested.insert(j);

        let columns: Vec<usize> = tested.iter().copied().collect();
        let (model, _) = fit_least_squares(self.d, rows, &columns)?;
        let node = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
            model,
            n,
        };
        Ok((node, tested))
    }
}

/// Routes `x` to a leaf. With smoothing on, the leaf value is blended into
/// each ancestor's model prediction: `p ← (n·p + k·q) / (n + k)` where `n` is
/// the row count of the child just left and `k` the smoothing constant.
pub fn predict_tree(t: &ModelTree, x: &FeatureMap) -> Result<f64> {
    let mut path: Vec<&TreeNode> = Vec::new();
    let mut node = &t.root;
    while let TreeNode::Split { feature, threshold, left, right, .. } = node {
        path.push(node);
        let v = x.get(feature).ok_or_else(|| Error::MissingFeature(feature.clone()))?;
        node = if *v <= *threshold { left } else { right };
    }
    let mut p = predict_linear(node.model(), x)?;
    if !t.smoothed || t.params.smoothing_k == 0.0 {
        return Ok(p);
    }
    let k = t.params.smoothing_k;
    let mut child_n = node.n() as f64;
    for ancestor in path.iter().rev() {
        let q = predict_linear(ancestor.model(), x)?;
        p = (child_n * p + k * q) / (child_n + k);
        child_n = ancestor.n() as f64;
    }
    Ok(p)
}

impl Predictor for ModelTree {
    fn predict(&self, features: &FeatureMap) -> Result<f64> {
        predict_tree(self, features)
    }
}

// JSON form: splits are `{"split": {...}, "model", "n", "left", "right"}`,
// leaves are `{"leaf": true, "model", "n"}`.
#[derive(Serialize, Deserialize)]
struct NodeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<SplitDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    leaf: Option<bool>,
    model: LinearModel,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<Box<NodeDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<Box<NodeDoc>>,
}

#[derive(Serialize, Deserialize)]
struct SplitDoc {
    feature: String,
    threshold: f64,
}

impl From<&TreeNode> for NodeDoc {
    fn from(node: &TreeNode) -> Self {
        match node {
            TreeNode::Leaf { model, n } => {
                NodeDoc { split: None, leaf: Some(true), model: model.clone(), n: *n, left: None, right: None }
            }
            TreeNode::Split { feature, threshold, left, right, model, n } => NodeDoc {
                split: Some(SplitDoc { feature: feature.clone(), threshold: *threshold }),
                leaf: None,
                model: model.clone(),
                n: *n,
                left: Some(Box::new(NodeDoc::from(&**left))),
                right: Some(Box::new(NodeDoc::from(&**right))),
            },
        }
    }
}

impl TryFrom<NodeDoc> for TreeNode {
    type Error = String;

    fn try_from(doc: NodeDoc) -> std::result::Result<Self, String> {
        if doc.n == 0 {
            return Err("node sample count must be at least 1".into());
        }
        match (doc.split, doc.left, doc.right) {
            (Some(split), Some(left), Some(right)) => {
                let left = TreeNode::try_from(*left)?;
                let right = TreeNode::try_from(*right)?;
                if left.n() + right.n() != doc.n {
                    return Err(format!("children hold {} + {} rows but node holds {}", left.n(), right.n(), doc.n));
                }
                if !split.threshold.is_finite() {
                    return Err("non-finite split threshold".into());
                }
                Ok(TreeNode::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left: Box::new(left),
                    right: Box::new(right),
                    model: doc.model,
                    n: doc.n,
                })
            }
            (None, None, None) if doc.leaf == Some(true) => Ok(TreeNode::Leaf { model: doc.model, n: doc.n }),
            _ => Err("node must be either a split with two children or a leaf".into()),
        }
    }
}

impl Serialize for TreeNode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        NodeDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TreeNode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = NodeDoc::deserialize(deserializer)?;
        TreeNode::try_from(doc).map_err(serde::de::Error::custom)
    }
}
