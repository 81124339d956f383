//! Fully connected feed-forward regressor.
//!
//! Every hidden layer is `Linear -> LeakyReLU -> BatchNorm1d -> Dropout`; the
//! head is a single linear unit. Gradients are computed by hand for both
//! batch-norm modes so they can be checked against finite differences.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_grad, LossKind};
use crate::error::{Error, Result};

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPS: f64 = 1e-5;
pub const PLATEAU_FACTOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpArch {
    /// Number of hidden layers.
    pub hidden_layers: usize,
    /// Width of every hidden layer.
    pub width: usize,
    pub dropout: f64,
    pub leaky_slope: f64,
}

impl Default for MlpArch {
    fn default() -> Self {
        MlpArch { hidden_layers: 2, width: 64, dropout: 0.1, leaky_slope: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpTrainConfig {
    pub loss: LossKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2_penalty: f64,
    /// Epochs without validation improvement before the learning rate is
    /// multiplied by [`PLATEAU_FACTOR`].
    pub plateau_patience: usize,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for MlpTrainConfig {
    fn default() -> Self {
        MlpTrainConfig {
            loss: LossKind::Mse,
            learning_rate: 1e-3,
            batch_size: 128,
            l2_penalty: 0.0,
            plateau_patience: 5,
            early_stop_patience: 12,
            max_epochs: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `out x in`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub scale: Array1<f64>,
    pub shift: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenLayer {
    pub linear: Dense,
    pub norm: BatchNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub n_features: usize,
    pub hidden: Vec<HiddenLayer>,
    pub head: Dense,
    pub dropout: f64,
    pub leaky_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics and active dropout.
    Train,
    /// Running statistics, dropout disabled.
    Eval,
}

struct LayerCache {
    input: Array2<f64>,
    pre: Array2<f64>,
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    batch_mean: Array1<f64>,
    batch_var: Array1<f64>,
    /// Inverted-dropout multipliers, absent when dropout is inactive.
    mask: Option<Array2<f64>>,
}

struct Cache {
    layers: Vec<LayerCache>,
    last: Array2<f64>,
}

fn uniform_init(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

impl MlpModel {
    /// Weights and biases drawn from U(-1/√fan_in, 1/√fan_in); batch-norm
    /// scale 1, shift 0.
    pub fn new(n_features: usize, arch: &MlpArch, seed: u64) -> Result<Self> {
        if n_features == 0 || arch.width == 0 {
            return Err(Error::InvalidConfig("network needs at least one input and one hidden unit".into()));
        }
        if !(0.0..1.0).contains(&arch.dropout) {
            return Err(Error::InvalidConfig(format!("dropout {} must lie in [0, 1)", arch.dropout)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut hidden = Vec::with_capacity(arch.hidden_layers);
        let mut fan_in = n_features;
        for _ in 0..arch.hidden_layers {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weight = uniform_init(&mut rng, arch.width, fan_in, bound);
            let bias = uniform_init(&mut rng, 1, arch.width, bound).into_shape_with_order(arch.width).unwrap();
            hidden.push(HiddenLayer {
                linear: Dense { weight, bias },
                norm: BatchNorm {
                    scale: Array1::ones(arch.width),
                    shift: Array1::zeros(arch.width),
                    running_mean: Array1::zeros(arch.width),
                    running_var: Array1::ones(arch.width),
                },
            });
            fan_in = arch.width;
        }
        let bound = 1.0 / (fan_in as f64).sqrt();
        let head = Dense {
            weight: uniform_init(&mut rng, 1, fan_in, bound),
            bias: uniform_init(&mut rng, 1, 1, bound).into_shape_with_order(1).unwrap(),
        };
        Ok(MlpModel { n_features, hidden, head, dropout: arch.dropout, leaky_slope: arch.leaky_slope })
    }

    pub fn n_params(&self) -> usize {
        self.hidden.iter().map(|h| h.linear.weight.len() + h.linear.bias.len() + 2 * h.norm.scale.len()).sum::<usize>()
            + self.head.weight.len()
            + self.head.bias.len()
    }

    /// Trainable parameters in a fixed order: per hidden layer weight
    /// (row-major), bias, norm scale, norm shift; then head weight and bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for h in &self.hidden {
            out.extend(h.linear.weight.iter());
            out.extend(h.linear.bias.iter());
            out.extend(h.norm.scale.iter());
            out.extend(h.norm.shift.iter());
        }
        out.extend(self.head.weight.iter());
        out.extend(self.head.bias.iter());
        out
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_params() {
            return Err(Error::InvalidArgument(format!("{} parameters for a network with {}", p.len(), self.n_params())));
        }
        let mut it = p.iter().copied();
        for h in &mut self.hidden {
            h.linear.weight.iter_mut().for_each(|v| *v = it.next().unwrap());
            h.linear.bias.iter_mut().for_each(|v| *v = it.next().unwrap());
            h.norm.scale.iter_mut().for_each(|v| *v = it.next().unwrap());
            h.norm.shift.iter_mut().for_each(|v| *v = it.next().unwrap());
        }
        self.head.weight.iter_mut().for_each(|v| *v = it.next().unwrap());
        self.head.bias.iter_mut().for_each(|v| *v = it.next().unwrap());
        Ok(())
    }

    /// Flags parameters subject to the L2 penalty (linear weights only).
    fn penalized(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.n_params());
        for h in &self.hidden {
            out.extend(std::iter::repeat_n(true, h.linear.weight.len()));
            out.extend(std::iter::repeat_n(false, h.linear.bias.len() + 2 * h.norm.scale.len()));
        }
        out.extend(std::iter::repeat_n(true, self.head.weight.len()));
        out.extend(std::iter::repeat_n(false, self.head.bias.len()));
        out
    }

    fn forward_cached(&self, x: ArrayView2<f64>, mode: Mode, rng: &mut ChaCha8Rng) -> Cache {
        let mut layers = Vec::with_capacity(self.hidden.len());
        let mut h = x.to_owned();
        let b = h.nrows() as f64;
        for layer in &self.hidden {
            let pre = h.dot(&layer.linear.weight.t()) + &layer.linear.bias;
            let slope = self.leaky_slope;
            let act = pre.mapv(|z| if z > 0.0 { z } else { slope * z });
            let (mean, var) = match mode {
                Mode::Train => {
                    let mean = act.sum_axis(Axis(0)) / b;
                    let var = (&act - &mean).mapv(|d| d * d).sum_axis(Axis(0)) / b;
                    (mean, var)
                }
                Mode::Eval => (layer.norm.running_mean.clone(), layer.norm.running_var.clone()),
            };
            let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
            let xhat = (&act - &mean) * &inv_std;
            let mut out = &xhat * &layer.norm.scale + &layer.norm.shift;
            let mask = if mode == Mode::Train && self.dropout > 0.0 {
                let keep = 1.0 - self.dropout;
                let m = Array2::from_shape_simple_fn(out.raw_dim(), || if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 });
                out *= &m;
                Some(m)
            } else {
                None
            };
            layers.push(LayerCache { input: h, pre, xhat, inv_std, batch_mean: mean, batch_var: var, mask });
            h = out;
        }
        Cache { layers, last: h }
    }

    fn head_output(&self, last: &Array2<f64>) -> Vec<f64> {
        let w = self.head.weight.row(0);
        let b = self.head.bias[0];
        last.rows().into_iter().map(|r| r.dot(&w) + b).collect()
    }

    /// Gradient of the mean batch loss (without the L2 term) with respect to
    /// [`MlpModel::params`], given `dpred = dloss/dprediction`.
    fn backward(&self, cache: &Cache, dpred: &[f64], mode: Mode) -> Vec<f64> {
        let n = dpred.len();
        let dout = Array1::from(dpred.to_vec());
        let head_dw = dout.dot(&cache.last);
        let head_db = dout.sum();
        let mut dh = Array2::from_shape_fn((n, self.head.weight.ncols()), |(i, j)| dout[i] * self.head.weight[[0, j]]);
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(self.hidden.len());
        let bf = n as f64;
        for (layer, lc) in self.hidden.iter().zip(&cache.layers).rev() {
            if let Some(m) = &lc.mask {
                dh *= m;
            }
            let dscale = (&dh * &lc.xhat).sum_axis(Axis(0));
            let dshift = dh.sum_axis(Axis(0));
            let dxhat = &dh * &layer.norm.scale;
            let dact = match mode {
                Mode::Eval => &dxhat * &lc.inv_std,
                Mode::Train => {
                    let sum_dxhat = dxhat.sum_axis(Axis(0));
                    let sum_dxhat_xhat = (&dxhat * &lc.xhat).sum_axis(Axis(0));
                    let inner = &dxhat * bf - &sum_dxhat - &lc.xhat * &sum_dxhat_xhat;
                    inner * &lc.inv_std / bf
                }
            };
            let slope = self.leaky_slope;
            let mut dpre = dact;
            ndarray::Zip::from(&mut dpre).and(&lc.pre).for_each(|d, &z| {
                if z <= 0.0 {
                    *d *= slope;
                }
            });
            let dw = dpre.t().dot(&lc.input);
            let db = dpre.sum_axis(Axis(0));
            dh = dpre.dot(&layer.linear.weight);
            let mut g = Vec::with_capacity(dw.len() + db.len() + 2 * dscale.len());
            g.extend(dw.iter());
            g.extend(db.iter());
            g.extend(dscale.iter());
            g.extend(dshift.iter());
            grads.push(g);
        }
        let mut out = Vec::with_capacity(self.n_params());
        for g in grads.into_iter().rev() {
            out.extend(g);
        }
        out.extend(head_dw.iter());
        out.push(head_db);
        out
    }

    #[inline]
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut h: Vec<f64> = x.to_vec();
        for layer in &self.hidden {
            let w = &layer.linear.weight;
            let mut next = Vec::with_capacity(w.nrows());
            for (j, row) in w.rows().into_iter().enumerate() {
                let mut z = layer.linear.bias[j];
                for (a, b) in row.iter().zip(&h) {
                    z += a * b;
                }
                let a = if z > 0.0 { z } else { self.leaky_slope * z };
                let nrm = &layer.norm;
                next.push((a - nrm.running_mean[j]) / (nrm.running_var[j] + BN_EPS).sqrt() * nrm.scale[j] + nrm.shift[j]);
            }
            h = next;
        }
        self.head.bias[0] + self.head.weight.row(0).iter().zip(&h).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Forward pass. `rng` drives the dropout masks in train mode and is unused
/// in eval mode.
pub fn mlp_forward(model: &MlpModel, x: &Array2<f64>, mode: Mode, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if x.ncols() != model.n_features {
        return Err(Error::FeatureMismatch { expected: model.n_features, got: x.ncols() });
    }
    let cache = model.forward_cached(x.view(), mode, rng);
    Ok(model.head_output(&cache.last))
}

/// Penalized mean loss `loss + ½·l2·Σw²` and its gradient with respect to
/// [`MlpModel::params`].
pub fn mlp_loss_and_gradients(
    model: &MlpModel,
    x: &Array2<f64>,
    y: &[f64],
    loss: LossKind,
    l2: f64,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<f64>)> {
    if x.ncols() != model.n_features {
        return Err(Error::FeatureMismatch { expected: model.n_features, got: x.ncols() });
    }
    let cache = model.forward_cached(x.view(), mode, rng);
    let pred = model.head_output(&cache.last);
    let (mut value, dpred) = loss_and_grad(loss, &pred, y)?;
    let mut grad = model.backward(&cache, &dpred, mode);
    if l2 > 0.0 {
        let params = model.params();
        for ((g, p), pen) in grad.iter_mut().zip(&params).zip(model.penalized()) {
            if pen {
                value += 0.5 * l2 * p * p;
                *g += l2 * p;
            }
        }
    }
    Ok((value, grad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_rmse: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_rmse: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * grad[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * grad[i] * grad[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

fn val_rmse(model: &MlpModel, x: &Array2<f64>, y: &[f64]) -> f64 {
    let mut ss = 0.0;
    for (row, t) in x.rows().into_iter().zip(y) {
        let p = model.predict_row(row.as_slice().expect("standard layout"));
        ss += (p - t) * (p - t);
    }
    (ss / y.len() as f64).sqrt()
}

fn update_running(model: &mut MlpModel, cache: &Cache) {
    let n = cache.last.nrows() as f64;
    let unbias = n / (n - 1.0);
    for (layer, lc) in model.hidden.iter_mut().zip(&cache.layers) {
        let nrm = &mut layer.norm;
        nrm.running_mean.zip_mut_with(&lc.batch_mean, |r, &b| *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b);
        nrm.running_var.zip_mut_with(&lc.batch_var, |r, &b| *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b * unbias);
    }
}

/// Trains a fresh network and returns the weights with the best validation
/// RMSE together with the per-epoch log.
pub fn mlp_train(
    x: &Array2<f64>,
    y: &[f64],
    x_val: &Array2<f64>,
    y_val: &[f64],
    arch: &MlpArch,
    cfg: &MlpTrainConfig,
) -> Result<(MlpModel, TrainingLog)> {
    let (n, p) = x.dim();
    if y.len() != n || y_val.len() != x_val.nrows() {
        return Err(Error::Alignment("feature rows and targets differ in length".into()));
    }
    if x_val.ncols() != p {
        return Err(Error::FeatureMismatch { expected: p, got: x_val.ncols() });
    }
    if n < 2 || y_val.is_empty() {
        return Err(Error::TooSmall(format!("{n} training rows and {} validation rows", y_val.len())));
    }
    if !(cfg.learning_rate > 0.0) || cfg.batch_size == 0 || cfg.max_epochs == 0 || !(cfg.l2_penalty >= 0.0) {
        return Err(Error::InvalidConfig("learning rate, batch size and epochs must be positive".into()));
    }
    let x = x.as_standard_layout().into_owned();
    let x_val = x_val.as_standard_layout().into_owned();
    let mut model = MlpModel::new(p, arch, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let batch = cfg.batch_size.min(n);
    let mut adam = Adam::new(model.n_params());
    let mut lr = cfg.learning_rate;
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = model.clone();
    let mut best_rmse = f64::INFINITY;
    let mut best_epoch = 0;
    let (mut since_best, mut since_plateau) = (0, 0);
    let mut epochs = Vec::new();
    let mut xb = Array2::zeros((batch, p));
    let mut yb = vec![0.0; batch];
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut batches) = (0.0, 0);
        for chunk in order.chunks(batch) {
            if chunk.len() < 2 {
                continue;
            }
            if chunk.len() != xb.nrows() {
                xb = Array2::zeros((chunk.len(), p));
                yb = vec![0.0; chunk.len()];
            }
            for (k, &i) in chunk.iter().enumerate() {
                xb.row_mut(k).assign(&x.row(i));
                yb[k] = y[i];
            }
            let cache = model.forward_cached(xb.view(), Mode::Train, &mut rng);
            let pred = model.head_output(&cache.last);
            let (mut value, dpred) = loss_and_grad(cfg.loss, &pred, &yb)?;
            let mut grad = model.backward(&cache, &dpred, Mode::Train);
            let mut params = model.params();
            if cfg.l2_penalty > 0.0 {
                for ((g, w), pen) in grad.iter_mut().zip(&params).zip(model.penalized()) {
                    if pen {
                        value += 0.5 * cfg.l2_penalty * w * w;
                        *g += cfg.l2_penalty * w;
                    }
                }
            }
            if !value.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            update_running(&mut model, &cache);
            adam.step(&mut params, &grad, lr);
            model.set_params(&params)?;
            loss_sum += value;
            batches += 1;
        }
        let v = val_rmse(&model, &x_val, y_val);
        if !v.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        epochs.push(EpochRecord { epoch, train_loss: loss_sum / batches.max(1) as f64, val_rmse: v, learning_rate: lr });
        if v < best_rmse {
            best_rmse = v;
            best = model.clone();
            best_epoch = epoch;
            since_best = 0;
            since_plateau = 0;
        } else {
            since_best += 1;
            since_plateau += 1;
            if since_best >= cfg.early_stop_patience {
                break;
            }
            if since_plateau >= cfg.plateau_patience {
                lr *= PLATEAU_FACTOR;
                since_plateau = 0;
            }
        }
    }
    Ok((best, TrainingLog { epochs, best_epoch, best_val_rmse: best_rmse }))
}

pub fn mlp_fit(
    x: &Array2<f64>,
    y: &[f64],
    x_val: &Array2<f64>,
    y_val: &[f64],
    arch: &MlpArch,
    cfg: &MlpTrainConfig,
) -> Result<MlpModel> {
    mlp_train(x, y, x_val, y_val, arch, cfg).map(|(m, _)| m)
}
