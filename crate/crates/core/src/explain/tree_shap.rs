//! Exact Shapley values for tree ensembles under the path-dependent
//! conditional expectation (polynomial-time tree SHAP).

use super::ShapExplanation;
use crate::error::{Error, Result};
use crate::models::{GbtModel, Tree, TreeNode};

#[derive(Debug, Clone, Copy)]
struct PathElem {
    /// `usize::MAX` marks the root placeholder.
    feature: usize,
    zero_fraction: f64,
    one_fraction: f64,
    weight: f64,
}

fn extend(path: &mut [PathElem], depth: usize, zero: f64, one: f64, feature: usize) {
    path[depth] = PathElem { feature, zero_fraction: zero, one_fraction: one, weight: if depth == 0 { 1.0 } else { 0.0 } };
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / d1;
        path[i].weight = zero * path[i].weight * (depth - i) as f64 / d1;
    }
}

fn unwind(path: &mut [PathElem], depth: usize, index: usize) {
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let d1 = (depth + 1) as f64;
    let mut next_one = path[depth].weight;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next_one * d1 / ((i + 1) as f64 * one);
            next_one = tmp - path[i].weight * zero * (depth - i) as f64 / d1;
        } else {
            path[i].weight = path[i].weight * d1 / (zero * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

fn unwound_sum(path: &[PathElem], depth: usize, index: usize) -> f64 {
    let one = path[index].one_fraction;
    let zero = path[index].zero_fraction;
    let d1 = (depth + 1) as f64;
    let mut next_one = path[depth].weight;
    let mut total = 0.0;
    for i in (0..depth).rev() {
        if one != 0.0 {
            let tmp = next_one * d1 / ((i + 1) as f64 * one);
            total += tmp;
            next_one = path[i].weight - tmp * zero * (depth - i) as f64 / d1;
        } else if zero != 0.0 {
            total += path[i].weight / zero / ((depth - i) as f64 / d1);
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    tree: &Tree,
    node: usize,
    x: &[f64],
    phi: &mut [f64],
    parent: &[PathElem],
    depth: usize,
    zero: f64,
    one: f64,
    feature: usize,
) {
    let mut path = parent.to_vec();
    path.resize(depth + 1, PathElem { feature: usize::MAX, zero_fraction: 0.0, one_fraction: 0.0, weight: 0.0 });
    extend(&mut path, depth, zero, one, feature);
    match &tree.nodes[node] {
        TreeNode::Leaf { weight, .. } => {
            for i in 1..=depth {
                let w = unwound_sum(&path, depth, i);
                phi[path[i].feature] += w * (path[i].one_fraction - path[i].zero_fraction) * weight;
            }
        }
        TreeNode::Split { feature: f, threshold, cover, left, right, .. } => {
            let (hot, cold) = if x[*f] < *threshold { (*left, *right) } else { (*right, *left) };
            let (mut in_zero, mut in_one) = (1.0, 1.0);
            let mut depth = depth;
            if let Some(k) = (1..=depth).find(|&k| path[k].feature == *f) {
                in_zero = path[k].zero_fraction;
                in_one = path[k].one_fraction;
                unwind(&mut path, depth, k);
                depth -= 1;
                path.truncate(depth + 1);
            }
            let frac = |c: usize| if *cover > 0.0 { tree.nodes[c].cover() / cover } else { 0.0 };
            recurse(tree, hot, x, phi, &path, depth + 1, in_zero * frac(hot), in_one, *f);
            recurse(tree, cold, x, phi, &path, depth + 1, in_zero * frac(cold), 0.0, *f);
        }
    }
}

/// Cover-weighted mean output of a tree: the prediction expected when no
/// feature is known.
pub fn tree_expectation(tree: &Tree) -> f64 {
    fn rec(t: &Tree, i: usize) -> f64 {
        match &t.nodes[i] {
            TreeNode::Leaf { weight, .. } => *weight,
            TreeNode::Split { cover, left, right, .. } => {
                let (cl, cr) = (t.nodes[*left].cover(), t.nodes[*right].cover());
                if *cover > 0.0 {
                    (cl * rec(t, *left) + cr * rec(t, *right)) / cover
                } else {
                    0.5 * (rec(t, *left) + rec(t, *right))
                }
            }
        }
    }
    rec(tree, 0)
}

/// Expected ensemble output under the training-cover distribution.
pub fn expected_value(model: &GbtModel) -> f64 {
    model.base_score + model.learning_rate * model.trees.iter().map(tree_expectation).sum::<f64>()
}

/// Shapley contributions of every feature to the prediction at `x`.
/// `base_value + Σ contributions` equals the model prediction.
pub fn tree_shap(model: &GbtModel, x: &[f64]) -> Result<ShapExplanation> {
    if x.len() != model.n_features {
        return Err(Error::FeatureMismatch { expected: model.n_features, got: x.len() });
    }
    let mut phi = vec![0.0; model.n_features];
    let mut tree_phi = vec![0.0; model.n_features];
    for tree in &model.trees {
        tree_phi.iter_mut().for_each(|v| *v = 0.0);
        recurse(tree, 0, x, &mut tree_phi, &[], 0, 1.0, 1.0, usize::MAX);
        for (p, t) in phi.iter_mut().zip(&tree_phi) {
            *p += model.learning_rate * t;
        }
    }
    Ok(ShapExplanation { base_value: expected_value(model), contributions: phi, std_errors: None })
}
