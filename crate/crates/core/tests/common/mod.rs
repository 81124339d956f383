//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use fuelmoist::models::mlp::mlp_loss_and_gradients;
use fuelmoist::models::{GbtConfig, GbtModel, LossKind, MlpArch, MlpModel, Mode, Regressor, Tree, TreeNode};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random continuous design matrix and a nonlinear response.
pub fn random_fixture(n: usize, p: usize, seed: u64) -> (Array2<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Array2<f64> = Array2::from_shape_simple_fn((n, p), || rng.random_range(-1.0..1.0));
    let y = (0..n)
        .map(|i| {
            let r = x.row(i);
            (2.0 * r[0]).sin() + r[p - 1] * r[p - 1] + 0.3 * rng.random_range(-1.0..1.0)
        })
        .collect();
    (x, y)
}

/// Recursive exact-greedy tree builder that recomputes every sum from the
/// raw rows.
fn reference_node(
    x: &Array2<f64>,
    grad: &[f64],
    rows: &[usize],
    depth: usize,
    cfg: &GbtConfig,
    out: &mut Vec<TreeNode>,
) -> usize {
    let g: f64 = rows.iter().map(|&r| grad[r]).sum();
    let h = rows.len() as f64;
    let at = out.len();
    out.push(TreeNode::Leaf { weight: -g / (h + cfg.lambda), cover: h });
    if depth == cfg.max_depth {
        return at;
    }
    let score = |gs: f64, hs: f64| gs * gs / (hs + cfg.lambda);
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = rows.iter().map(|&r| x[[r, f]]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x[[r, f]] < thr).collect();
            let gl: f64 = left.iter().map(|&r| grad[r]).sum();
            let hl = left.len() as f64;
            let gain = 0.5 * (score(gl, hl) + score(g - gl, h - hl) - score(g, h));
            if gain > cfg.gamma + 1e-9 && best.is_none_or(|b| gain - b.0 > 1e-10 * (1.0 + score(g, h))) {
                best = Some((gain, f, thr));
            }
        }
    }
    if let Some((gain, f, thr)) = best {
        let left: Vec<usize> = rows.iter().copied().filter(|&r| x[[r, f]] < thr).collect();
        let right: Vec<usize> = rows.iter().copied().filter(|&r| x[[r, f]] >= thr).collect();
        let l = reference_node(x, grad, &left, depth + 1, cfg, out);
        let r = reference_node(x, grad, &right, depth + 1, cfg, out);
        out[at] = TreeNode::Split { feature: f, threshold: thr, gain, cover: h, left: l, right: r };
    }
    at
}

/// Full-data boosting with the reference tree builder.
pub fn reference_gbt(x: &Array2<f64>, y: &[f64], cfg: &GbtConfig) -> GbtModel {
    let n = y.len();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let rows: Vec<usize> = (0..n).collect();
    let mut trees = Vec::new();
    for _ in 0..cfg.n_estimators {
        let grad: Vec<f64> = (0..n).map(|i| pred[i] - y[i]).collect();
        let mut nodes = Vec::new();
        reference_node(x, &grad, &rows, 0, cfg, &mut nodes);
        let t = Tree { nodes };
        for i in 0..n {
            pred[i] += cfg.learning_rate * t.predict_row(x.row(i).as_slice().unwrap());
        }
        trees.push(t);
    }
    GbtModel { base_score: base, learning_rate: cfg.learning_rate, trees, n_features: x.ncols() }
}

/// Asserts two ensembles agree node for node.
pub fn assert_same_trees(a: &GbtModel, b: &GbtModel, tol: f64) -> Result<(), String> {
    if a.trees.len() != b.trees.len() {
        return Err(format!("{} vs {} trees", a.trees.len(), b.trees.len()));
    }
    let close = |u: f64, v: f64| (u - v).abs() <= tol * (1.0 + u.abs().max(v.abs()));
    for (t, (ta, tb)) in a.trees.iter().zip(&b.trees).enumerate() {
        if ta.nodes.len() != tb.nodes.len() {
            return Err(format!("tree {t}: {} vs {} nodes", ta.nodes.len(), tb.nodes.len()));
        }
        for (k, (na, nb)) in ta.nodes.iter().zip(&tb.nodes).enumerate() {
            let ok = match (na, nb) {
                (
                    TreeNode::Split { feature: f1, threshold: t1, gain: g1, left: l1, right: r1, .. },
                    TreeNode::Split { feature: f2, threshold: t2, gain: g2, left: l2, right: r2, .. },
                ) => f1 == f2 && t1 == t2 && l1 == l2 && r1 == r2 && close(*g1, *g2),
                (TreeNode::Leaf { weight: w1, cover: c1 }, TreeNode::Leaf { weight: w2, cover: c2 }) => {
                    close(*w1, *w2) && c1 == c2
                }
                _ => false,
            };
            if !ok {
                return Err(format!("tree {t} node {k}: {na:?} vs {nb:?}"));
            }
        }
    }
    Ok(())
}

/// Path-dependent conditional expectation of one tree given the features
/// in `known`.
fn conditional(tree: &Tree, node: usize, x: &[f64], known: u32) -> f64 {
    match &tree.nodes[node] {
        TreeNode::Leaf { weight, .. } => *weight,
        TreeNode::Split { feature, threshold, cover, left, right, .. } => {
            if known & (1 << feature) != 0 {
                conditional(tree, if x[*feature] < *threshold { *left } else { *right }, x, known)
            } else {
                let (cl, cr) = (tree.nodes[*left].cover(), tree.nodes[*right].cover());
                (cl * conditional(tree, *left, x, known) + cr * conditional(tree, *right, x, known)) / cover
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Shapley values by enumerating every feature subset.
pub fn brute_force_shap(model: &GbtModel, x: &[f64]) -> (f64, Vec<f64>) {
    let m = model.n_features;
    let value = |s: u32| {
        model.base_score + model.learning_rate * model.trees.iter().map(|t| conditional(t, 0, x, s)).sum::<f64>()
    };
    let mut phi = vec![0.0; m];
    for (i, p) in phi.iter_mut().enumerate() {
        for s in 0u32..(1 << m) {
            if s & (1 << i) != 0 {
                continue;
            }
            let k = s.count_ones() as usize;
            let w = factorial(k) * factorial(m - k - 1) / factorial(m);
            *p += w * (value(s | (1 << i)) - value(s));
        }
    }
    (value(0), phi)
}

/// Shapley values of the background-substitution game, averaging marginal
/// contributions over every permutation and every background row.
pub fn exhaustive_permutation_shap<M: Regressor>(model: &M, x: &[f64], background: &Array2<f64>) -> Vec<f64> {
    let p = x.len();
    let mut perms = Vec::new();
    permutations(&mut (0..p).collect(), 0, &mut perms);
    let mut phi = vec![0.0; p];
    for z in background.rows() {
        for perm in &perms {
            let mut v = z.to_vec();
            let mut prev = model.predict_row(&v);
            for &j in perm {
                v[j] = x[j];
                let cur = model.predict_row(&v);
                phi[j] += cur - prev;
                prev = cur;
            }
        }
    }
    let n = (perms.len() * background.nrows()) as f64;
    phi.iter().map(|v| v / n).collect()
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == items.len() {
        out.push(items.clone());
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

pub fn random_mlp(n_features: usize, arch: &MlpArch, rng: &mut ChaCha8Rng) -> MlpModel {
    let mut m = MlpModel::new(n_features, arch, rng.random()).unwrap();
    let p: Vec<f64> = (0..m.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
    m.set_params(&p).unwrap();
    for h in &mut m.hidden {
        h.norm.running_mean.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        h.norm.running_var.mapv_inplace(|_| rng.random_range(0.5..2.0));
    }
    m
}

/// Largest relative error between analytic and central-difference gradients
/// over `coords` random parameter coordinates.
pub fn gradient_check(arch: &MlpArch, loss: LossKind, coords: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = 4;
    let mut model = random_mlp(p, arch, &mut rng);
    model.dropout = 0.0;
    let x = Array2::from_shape_simple_fn((16, p), || rng.random_range(-1.0..1.0));
    // targets well away from predictions keep MAE residuals off its kink
    let shift = if loss == LossKind::Mae { 10.0 } else { 0.0 };
    let y: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..2.0) + shift).collect();
    let mut dummy = ChaCha8Rng::seed_from_u64(0);
    let l2 = 1e-3;
    let (_, grad) = mlp_loss_and_gradients(&model, &x, &y, loss, l2, Mode::Eval, &mut dummy).unwrap();
    let p0 = model.params();
    let eps = 1e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..coords {
        let i = rng.random_range(0..p0.len());
        let mut q = p0.clone();
        q[i] = p0[i] + eps;
        model.set_params(&q).unwrap();
        let up = mlp_loss_and_gradients(&model, &x, &y, loss, l2, Mode::Eval, &mut dummy).unwrap().0;
        q[i] = p0[i] - eps;
        model.set_params(&q).unwrap();
        let dn = mlp_loss_and_gradients(&model, &x, &y, loss, l2, Mode::Eval, &mut dummy).unwrap().0;
        model.set_params(&p0).unwrap();
        let fd = (up - dn) / (2.0 * eps);
        let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

pub const ARCHS: [MlpArch; 3] = [
    MlpArch { hidden_layers: 1, width: 8, dropout: 0.0, leaky_slope: 0.01 },
    MlpArch { hidden_layers: 2, width: 6, dropout: 0.2, leaky_slope: 0.01 },
    MlpArch { hidden_layers: 3, width: 5, dropout: 0.5, leaky_slope: 0.01 },
];
