//! Second-order gradient-boosted regression trees on squared error with
//! exact greedy split search.
//!
//! Each round fits one tree to gradients `g = pred - y` and unit hessians.
//! A node with gradient sum `G` and hessian sum `H` gets leaf weight
//! `-G / (H + λ)`; a split is kept when its loss reduction
//! `½[GL²/(HL+λ) + GR²/(HR+λ) - G²/(H+λ)]` exceeds `γ`.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    pub learning_rate: f64,
    /// Minimum loss reduction required to split a node.
    pub gamma: f64,
    pub max_depth: usize,
    pub n_estimators: usize,
    pub subsample: f64,
    pub colsample_bytree: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
}

impl Default for GbtConfig {
    fn default() -> Self {
        GbtConfig {
            learning_rate: 0.1,
            gamma: 0.0,
            max_depth: 6,
            n_estimators: 100,
            subsample: 1.0,
            colsample_bytree: 1.0,
            lambda: 1.0,
        }
    }
}

impl GbtConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if !(self.gamma >= 0.0) || !(self.lambda >= 0.0) {
            return Err(Error::InvalidConfig("gamma and lambda must be non-negative".into()));
        }
        if !frac(self.subsample) || !frac(self.colsample_bytree) {
            return Err(Error::InvalidConfig("subsample and colsample_bytree must lie in (0, 1]".into()));
        }
        if self.n_estimators == 0 {
            return Err(Error::InvalidConfig("n_estimators must be positive".into()));
        }
        Ok(())
    }
}

/// A tree node. Children are indices into the owning tree's node list, which
/// is stored in pre-order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        /// Rows with `x[feature] < threshold` go left.
        threshold: f64,
        /// Loss reduction of the split (before subtracting γ).
        gain: f64,
        cover: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
        cover: f64,
    },
}

impl TreeNode {
    pub fn cover(&self) -> f64 {
        match self {
            TreeNode::Split { cover, .. } | TreeNode::Leaf { cover, .. } => *cover,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(weight: f64, cover: f64) -> Self {
        Tree { nodes: vec![TreeNode::Leaf { weight, cover }] }
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { weight, .. } => return *weight,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    i = if x[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn rec(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + rec(t, *left).max(rec(t, *right)),
            }
        }
        rec(self, 0)
    }

    pub fn splits(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            TreeNode::Split { feature, threshold, gain, .. } => Some((*feature, *threshold, *gain)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    /// Mean of the training targets.
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    pub n_features: usize,
}

impl GbtModel {
    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>()
    }
}

pub fn gbt_predict(model: &GbtModel, x: &Array2<f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.n_features {
        return Err(Error::FeatureMismatch { expected: model.n_features, got: x.ncols() });
    }
    Ok(x.rows().into_iter().map(|r| model.predict_row(r.as_slice().expect("standard layout"))).collect())
}

/// Relative slack below which a positive loss reduction is treated as
/// round-off rather than signal.
pub const GAIN_EPS: f64 = 1e-12;

/// Loss reduction of splitting (G, H) into (GL, HL) and the complement.
#[inline]
pub fn split_gain(gl: f64, hl: f64, g: f64, h: f64, lambda: f64) -> f64 {
    let (gr, hr) = (g - gl, h - hl);
    0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda))
}

/// Whether a split with loss reduction `gain` in a node with gradient
/// statistics (G, H) is accepted.
#[inline]
pub fn accept_split(gain: f64, g: f64, h: f64, cfg_gamma: f64, lambda: f64) -> bool {
    let scale = g * g / (h + lambda);
    gain > cfg_gamma && gain - cfg_gamma > GAIN_EPS * (1.0 + scale)
}

/// Relative margin by which a candidate must beat the incumbent split;
/// smaller differences are round-off and the earlier candidate (lower
/// feature index, then lower threshold) is kept.
pub const TIE_EPS: f64 = 1e-10;

#[inline]
pub fn improves(gain: f64, incumbent: f64, g: f64, h: f64, lambda: f64) -> bool {
    gain - incumbent > TIE_EPS * (1.0 + g * g / (h + lambda))
}

/// Threshold strictly above `lo` and at most `hi`.
#[inline]
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = 0.5 * (lo + hi);
    if m > lo { m } else { hi }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Clone, Copy)]
struct ScanState {
    gl: f64,
    hl: f64,
    last: f64,
    seen: bool,
}

struct Pending {
    g: f64,
    h: f64,
    best: Option<Candidate>,
    children: Option<(usize, usize)>,
}

/// Fits an ensemble; `seed` drives row and column subsampling.
pub fn gbt_fit(x: &Array2<f64>, y: &[f64], cfg: &GbtConfig, seed: u64) -> Result<GbtModel> {
    cfg.validate()?;
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(Error::Alignment(format!("{n} feature rows vs {} targets", y.len())));
    }
    if n < 2 {
        return Err(Error::TooSmall(format!("{n} rows; boosting needs at least 2")));
    }
    if p == 0 {
        return Err(Error::InvalidArgument("no predictors".into()));
    }
    let x = x.as_standard_layout();
    let xs = x.as_slice().expect("standard layout");
    let base_score = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base_score; n];

    // per-feature row order, ascending by value then row index
    let orders: Vec<Vec<u32>> = (0..p)
        .map(|j| {
            let mut o: Vec<u32> = (0..n as u32).collect();
            o.sort_by(|&a, &b| xs[a as usize * p + j].total_cmp(&xs[b as usize * p + j]).then(a.cmp(&b)));
            o
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_rows_sample = ((cfg.subsample * n as f64).round() as usize).clamp(1, n);
    let n_cols_sample = ((cfg.colsample_bytree * p as f64).round() as usize).clamp(1, p);
    let mut grad = vec![0.0; n];
    let mut trees = Vec::with_capacity(cfg.n_estimators);
    for _ in 0..cfg.n_estimators {
        for i in 0..n {
            grad[i] = pred[i] - y[i];
        }
        let in_sample: Vec<bool> = if n_rows_sample == n {
            vec![true; n]
        } else {
            let mut m = vec![false; n];
            for i in sample(&mut rng, n, n_rows_sample) {
                m[i] = true;
            }
            m
        };
        let features: Vec<usize> = if n_cols_sample == p {
            (0..p).collect()
        } else {
            let mut f: Vec<usize> = sample(&mut rng, p, n_cols_sample).into_vec();
            f.sort_unstable();
            f
        };
        let tree = build_tree(xs, p, &grad, &in_sample, &features, &orders, cfg);
        for i in 0..n {
            pred[i] += cfg.learning_rate * tree.predict_row(&xs[i * p..(i + 1) * p]);
        }
        trees.push(tree);
    }
    Ok(GbtModel { base_score, learning_rate: cfg.learning_rate, trees, n_features: p })
}

/// Level-wise exact greedy tree growth over the sampled rows and features.
fn build_tree(
    xs: &[f64],
    p: usize,
    grad: &[f64],
    in_sample: &[bool],
    features: &[usize],
    orders: &[Vec<u32>],
    cfg: &GbtConfig,
) -> Tree {
    const NONE: u32 = u32::MAX;
    let n = grad.len();
    let lambda = cfg.lambda;
    let mut node_of: Vec<u32> = (0..n).map(|i| if in_sample[i] { 0 } else { NONE }).collect();
    let (mut g0, mut h0) = (0.0, 0.0);
    for i in 0..n {
        if in_sample[i] {
            g0 += grad[i];
            h0 += 1.0;
        }
    }
    let mut nodes: Vec<Pending> = vec![Pending { g: g0, h: h0, best: None, children: None }];
    let mut frontier: Vec<usize> = vec![0];
    for _depth in 0..cfg.max_depth {
        if frontier.is_empty() {
            break;
        }
        // slot of each frontier node in the scan arrays
        let mut slot = vec![usize::MAX; nodes.len()];
        for (s, &id) in frontier.iter().enumerate() {
            slot[id] = s;
        }
        let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
        let mut state = vec![ScanState { gl: 0.0, hl: 0.0, last: 0.0, seen: false }; frontier.len()];
        for &f in features {
            for st in state.iter_mut() {
                *st = ScanState { gl: 0.0, hl: 0.0, last: 0.0, seen: false };
            }
            for &r in &orders[f] {
                let r = r as usize;
                let id = node_of[r];
                if id == NONE {
                    continue;
                }
                let s = slot[id as usize];
                if s == usize::MAX {
                    continue;
                }
                let v = xs[r * p + f];
                let st = &mut state[s];
                if st.seen && v > st.last {
                    let nd = &nodes[id as usize];
                    let gain = split_gain(st.gl, st.hl, nd.g, nd.h, lambda);
                    if accept_split(gain, nd.g, nd.h, cfg.gamma, lambda)
                        && best[s].is_none_or(|b| improves(gain, b.gain, nd.g, nd.h, lambda))
                    {
                        best[s] = Some(Candidate { gain, feature: f, threshold: midpoint(st.last, v) });
                    }
                }
                st.gl += grad[r];
                st.hl += 1.0;
                st.last = v;
                st.seen = true;
            }
        }
        let mut next = Vec::new();
        for (s, &id) in frontier.iter().enumerate() {
            if let Some(c) = best[s] {
                let l = nodes.len();
                nodes.push(Pending { g: 0.0, h: 0.0, best: None, children: None });
                nodes.push(Pending { g: 0.0, h: 0.0, best: None, children: None });
                nodes[id].best = Some(c);
                nodes[id].children = Some((l, l + 1));
                next.push(l);
                next.push(l + 1);
            }
        }
        if next.is_empty() {
            break;
        }
        for r in 0..n {
            let id = node_of[r];
            if id == NONE {
                continue;
            }
            if let (Some(c), Some((l, rt))) = (nodes[id as usize].best, nodes[id as usize].children) {
                let child = if xs[r * p + c.feature] < c.threshold { l } else { rt };
                node_of[r] = child as u32;
                nodes[child].g += grad[r];
                nodes[child].h += 1.0;
            }
        }
        frontier = next;
    }

    // re-emit in pre-order
    fn emit(nodes: &[Pending], id: usize, lambda: f64, out: &mut Vec<TreeNode>) -> usize {
        let at = out.len();
        let nd = &nodes[id];
        match (nd.best, nd.children) {
            (Some(c), Some((l, r))) => {
                out.push(TreeNode::Leaf { weight: 0.0, cover: 0.0 });
                let li = emit(nodes, l, lambda, out);
                let ri = emit(nodes, r, lambda, out);
                out[at] = TreeNode::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    gain: c.gain,
                    cover: nd.h,
                    left: li,
                    right: ri,
                };
            }
            _ => out.push(TreeNode::Leaf { weight: -nd.g / (nd.h + lambda), cover: nd.h }),
        }
        at
    }
    let mut out = Vec::with_capacity(nodes.len());
    emit(&nodes, 0, lambda, &mut out);
    Tree { nodes: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rmse(a: &[f64], b: &[f64]) -> f64 {
        (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    }

    #[test]
    fn constant_target_predicts_constant() {
        let x = Array2::from_shape_fn((40, 3), |(i, j)| ((i * 7 + j * 13) % 11) as f64);
        let y = vec![0.1; 40];
        let m = gbt_fit(&x, &y, &GbtConfig::default(), 0).unwrap();
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
        for p in gbt_predict(&m, &x).unwrap() {
            assert!((p - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn step_function_single_stump() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
        let y: Vec<f64> = xs.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
        let x = Array2::from_shape_vec((200, 1), xs.clone()).unwrap();
        let cfg = GbtConfig { learning_rate: 1.0, gamma: 0.0, lambda: 0.0, max_depth: 1, n_estimators: 1, ..Default::default() };
        let m = gbt_fit(&x, &y, &cfg, 0).unwrap();
        let t = &m.trees[0];
        // straddling samples are 99/199 and 100/199
        match t.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert!((threshold - 0.5 * (99.0 / 199.0 + 100.0 / 199.0)).abs() < 1e-15);
            }
            _ => panic!("expected a split"),
        }
        let preds = gbt_predict(&m, &x).unwrap();
        assert!(rmse(&preds, &y) < 1e-12);
    }

    #[test]
    fn training_error_non_increasing() {
        let x = Array2::from_shape_fn((150, 3), |(i, j)| (((i * 31 + j * 17) % 97) as f64 / 97.0) - 0.5);
        let y: Vec<f64> = (0..150).map(|i| x[[i, 0]].powi(2) * 4.0 + (x[[i, 1]] * 6.0).sin()).collect();
        let cfg = GbtConfig { n_estimators: 60, max_depth: 3, learning_rate: 0.3, colsample_bytree: 0.7, ..Default::default() };
        let m = gbt_fit(&x, &y, &cfg, 5).unwrap();
        let mut prev = f64::INFINITY;
        let mut pred = vec![m.base_score; 150];
        for t in &m.trees {
            for i in 0..150 {
                pred[i] += m.learning_rate * t.predict_row(x.row(i).as_slice().unwrap());
            }
            let e = rmse(&pred, &y);
            assert!(e <= prev + 1e-12);
            prev = e;
        }
    }

    #[test]
    fn gamma_and_depth_respected() {
        let x = Array2::from_shape_fn((120, 2), |(i, j)| ((i * 13 + j * 7) % 29) as f64);
        let y: Vec<f64> = (0..120).map(|i| x[[i, 0]] * 0.3 + (i % 3) as f64).collect();
        let cfg = GbtConfig { gamma: 5.0, max_depth: 3, n_estimators: 20, ..Default::default() };
        let m = gbt_fit(&x, &y, &cfg, 1).unwrap();
        for t in &m.trees {
            assert!(t.depth() <= 3);
            assert!(t.splits().all(|(_, _, g)| g >= 5.0));
        }
    }

    #[test]
    fn subsampling_is_seeded() {
        let x = Array2::from_shape_fn((60, 4), |(i, j)| ((i * 11 + j * 3) % 17) as f64);
        let y: Vec<f64> = (0..60).map(|i| x[[i, 2]] - x[[i, 3]]).collect();
        let cfg = GbtConfig { subsample: 0.6, colsample_bytree: 0.5, n_estimators: 10, ..Default::default() };
        assert_eq!(gbt_fit(&x, &y, &cfg, 3).unwrap(), gbt_fit(&x, &y, &cfg, 3).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let x = Array2::zeros((4, 1));
        let y = [0.0; 4];
        for cfg in [
            GbtConfig { subsample: 0.0, ..Default::default() },
            GbtConfig { colsample_bytree: 1.5, ..Default::default() },
            GbtConfig { gamma: -1.0, ..Default::default() },
            GbtConfig { learning_rate: 0.0, ..Default::default() },
        ] {
            assert!(matches!(gbt_fit(&x, &y, &cfg, 0), Err(Error::InvalidConfig(_))));
        }
        assert!(gbt_fit(&Array2::zeros((1, 1)), &[1.0], &GbtConfig::default(), 0).is_err());
        let m = gbt_fit(&x, &y, &GbtConfig::default(), 0).unwrap();
        assert!(matches!(gbt_predict(&m, &Array2::zeros((2, 3))), Err(Error::FeatureMismatch { .. })));
    }
}
