//! Bottom-up error-based pruning.

use crate::dataset::Dataset;
use crate::error::Result;
use crate::linear::LinearModel;

use super::{ModelTree, TreeNode};

/// Multiplier applied when a model has at least as many parameters as rows.
pub const PRUNING_PENALTY: f64 = 10.0;

/// Pessimistic error of `model` on `rows`: training MAE scaled by
/// `(n + v) / (n − v)` with `v` the parameter count.
///
/// A model with `n <= v` interpolates its rows, so its training error says
/// nothing; it is charged `PRUNING_PENALTY` times the rows' mean absolute
/// deviation about their mean instead.
pub fn estimated_error(model: &LinearModel, d: &Dataset, rows: &[usize]) -> Result<f64> {
    if rows.is_empty() {
        return Ok(0.0);
    }
    let n = rows.len() as f64;
    let v = model.num_parameters() as f64;
    let targets = d.targets();
    if n <= v {
        let mean = rows.iter().map(|&i| targets[i]).sum::<f64>() / n;
        let mad = rows.iter().map(|&i| (targets[i] - mean).abs()).sum::<f64>() / n;
        return Ok(PRUNING_PENALTY * mad);
    }
    let bound = model.bind(d.feature_names())?;
    let mae = rows.iter().map(|&i| (bound.predict_row(d.row(i)) - targets[i]).abs()).sum::<f64>() / n;
    Ok(mae * (n + v) / (n - v))
}

/// Replaces a subtree by its node model wherever the node model's estimated
/// error is no worse than the row-weighted estimate of its (already pruned)
/// children. Estimates are recomputed from `d` routed through `t`.
pub fn prune(t: &ModelTree, d: &Dataset) -> Result<ModelTree> {
    let rows: Vec<usize> = (0..d.len()).collect();
    let (root, _) = prune_node(&t.root, d, &rows)?;
    Ok(ModelTree { params: t.params, smoothed: t.smoothed, root })
}

fn prune_node(node: &TreeNode, d: &Dataset, rows: &[usize]) -> Result<(TreeNode, f64)> {
    match node {
        TreeNode::Leaf { model, .. } => Ok((node.clone(), estimated_error(model, d, rows)?)),
        TreeNode::Split { feature, threshold, left, right, model, n } => {
            let j = d
                .feature_index(feature)
                .ok_or_else(|| crate::error::Error::MissingFeature(feature.clone()))?;
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| d.row(i)[j] <= *threshold);
            let (left, left_err) = prune_node(left, d, &left_rows)?;
            let (right, right_err) = prune_node(right, d, &right_rows)?;
            let total = rows.len() as f64;
            let subtree_err = if rows.is_empty() {
                0.0
            } else {
                (left_rows.len() as f64 * left_err + right_rows.len() as f64 * right_err) / total
            };
            let node_err = estimated_error(model, d, rows)?;
            if node_err <= subtree_err {
                Ok((TreeNode::Leaf { model: model.clone(), n: *n }, node_err))
            } else {
                let kept = TreeNode::Split {
                    feature: feature.clone(),
                    threshold: *threshold,
                    left: Box::new(left),
                    right: Box::new(right),
                    model: model.clone(),
                    n: *n,
                };
                Ok((kept, subtree_err))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{build_tree, TreeParams};

    #[test]
    fn exact_leaves_survive_pruning() {
        // y = 2x on the left, y = 100 - 3x on the right
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| if x < 10.0 { 2.0 * x } else { 100.0 - 3.0 * x }).collect();
        let d = Dataset::new(vec!["x".into()], xs.iter().map(|&x| vec![x]).collect(), ys).unwrap();
        let params = TreeParams { prune: false, ..TreeParams::default() };
        let unpruned = build_tree(&d, &params).unwrap();
        assert!(!unpruned.root.is_leaf());
        let pruned = prune(&unpruned, &d).unwrap();
        assert!(!pruned.root.is_leaf());
        assert_eq!(prune(&pruned, &d).unwrap(), pruned);
    }

    #[test]
    fn saturated_model_is_penalized() {
        let d = Dataset::new(vec!["x".into()], vec![vec![0.0], vec![1.0]], vec![1.0, 3.0]).unwrap();
        let m = LinearModel::from_terms(1.0, [("x", 2.0)]);
        // n = v = 2: 10 * mean |y - 2| = 10
        assert_eq!(estimated_error(&m, &d, &[0, 1]).unwrap(), 10.0);
        let c = LinearModel::constant(2.0);
        // n = 2, v = 1: MAE 1 * 3 / 1
        assert_eq!(estimated_error(&c, &d, &[0, 1]).unwrap(), 3.0);
    }
}
