//! Trial-based hyperparameter search: random sampling followed by a
//! tree-structured Parzen estimator (TPE).

use std::fmt;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{GbtConfig, LossKind, MlpArch, MlpTrainConfig};

pub const DEFAULT_GAMMA_Q: f64 = 0.25;
pub const DEFAULT_CANDIDATES: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Dimension {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    Integer { lo: i64, hi: i64 },
    Categorical { options: Vec<String> },
}

impl Dimension {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            Dimension::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Dimension::LogUniform { lo, hi } => *lo > 0.0 && hi.is_finite() && lo < hi,
            Dimension::Integer { lo, hi } => lo < hi,
            Dimension::Categorical { options } => !options.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("dimension `{name}` has empty or inverted bounds")))
        }
    }

    /// Bounds of the continuous working space (log scale for log-uniform).
    fn working_bounds(&self) -> (f64, f64) {
        match self {
            Dimension::Uniform { lo, hi } => (*lo, *hi),
            Dimension::LogUniform { lo, hi } => (lo.ln(), hi.ln()),
            Dimension::Integer { lo, hi } => (*lo as f64 - 0.5, *hi as f64 + 0.5),
            Dimension::Categorical { .. } => unreachable!("categorical has no continuous bounds"),
        }
    }

    fn to_working(&self, v: &ParamValue) -> Option<f64> {
        match (self, v) {
            (Dimension::Uniform { .. }, ParamValue::Real(x)) => Some(*x),
            (Dimension::LogUniform { .. }, ParamValue::Real(x)) => Some(x.ln()),
            (Dimension::Integer { .. }, ParamValue::Int(i)) => Some(*i as f64),
            _ => None,
        }
    }

    fn decode(&self, w: f64) -> ParamValue {
        match self {
            Dimension::Uniform { lo, hi } => ParamValue::Real(w.clamp(*lo, *hi)),
            Dimension::LogUniform { lo, hi } => ParamValue::Real(w.exp().clamp(*lo, *hi)),
            Dimension::Integer { lo, hi } => ParamValue::Int((w.round() as i64).clamp(*lo, *hi)),
            Dimension::Categorical { .. } => unreachable!("categorical has no working space"),
        }
    }

    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (Dimension::Uniform { lo, hi } | Dimension::LogUniform { lo, hi }, ParamValue::Real(x)) => {
                x >= lo && x <= hi
            }
            (Dimension::Integer { lo, hi }, ParamValue::Int(i)) => i >= lo && i <= hi,
            (Dimension::Categorical { options }, ParamValue::Cat(s)) => options.contains(s),
            _ => false,
        }
    }

    fn parse(&self, s: &str) -> Result<ParamValue> {
        let bad = || Error::Parse(format!("value `{s}` does not fit its dimension"));
        let v = match self {
            Dimension::Uniform { .. } | Dimension::LogUniform { .. } => {
                ParamValue::Real(s.parse().map_err(|_| bad())?)
            }
            Dimension::Integer { .. } => ParamValue::Int(s.parse().map_err(|_| bad())?),
            Dimension::Categorical { .. } => ParamValue::Cat(s.to_string()),
        };
        if self.contains(&v) {
            Ok(v)
        } else {
            Err(bad())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(x) => write!(f, "{x}"),
            ParamValue::Cat(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    dims: Vec<(String, Dimension)>,
}

impl ParamSpace {
    pub fn new(dims: Vec<(String, Dimension)>) -> Result<Self> {
        for (i, (name, d)) in dims.iter().enumerate() {
            d.validate(name)?;
            if dims[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidConfig(format!("duplicate dimension `{name}`")));
            }
        }
        Ok(ParamSpace { dims })
    }

    pub fn dims(&self) -> &[(String, Dimension)] {
        &self.dims
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        a.values.len() == self.dims.len()
            && self.dims.iter().zip(&a.values).all(|((n, d), (m, v))| n == m && d.contains(v))
    }
}

/// One value per dimension, in the space's order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub values: Vec<(String, ParamValue)>,
}

impl Assignment {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn real(&self, name: &str) -> Result<f64> {
        match self.get(name) {
            Some(ParamValue::Real(x)) => Ok(*x),
            Some(ParamValue::Int(i)) => Ok(*i as f64),
            _ => Err(Error::InvalidConfig(format!("assignment lacks real `{name}`"))),
        }
    }

    pub fn int(&self, name: &str) -> Result<i64> {
        match self.get(name) {
            Some(ParamValue::Int(i)) => Ok(*i),
            _ => Err(Error::InvalidConfig(format!("assignment lacks integer `{name}`"))),
        }
    }

    pub fn cat(&self, name: &str) -> Result<&str> {
        match self.get(name) {
            Some(ParamValue::Cat(s)) => Ok(s),
            _ => Err(Error::InvalidConfig(format!("assignment lacks option `{name}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: usize,
    pub params: Assignment,
    /// Present iff the trial completed.
    pub objective: Option<f64>,
    pub status: TrialStatus,
}

impl Trial {
    pub fn completed(id: usize, params: Assignment, objective: f64) -> Self {
        Trial { id, params, objective: Some(objective), status: TrialStatus::Complete }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TpeState {
    pub history: Vec<Trial>,
    pub gamma_q: f64,
    pub n_candidates: usize,
}

impl TpeState {
    pub fn new(history: Vec<Trial>) -> Self {
        TpeState { history, gamma_q: DEFAULT_GAMMA_Q, n_candidates: DEFAULT_CANDIDATES }
    }
}

pub fn sample_random<R: Rng + ?Sized>(space: &ParamSpace, rng: &mut R) -> Assignment {
    let values = space
        .dims
        .iter()
        .map(|(name, d)| {
            let v = match d {
                Dimension::Uniform { lo, hi } => ParamValue::Real(rng.random_range(*lo..*hi)),
                Dimension::LogUniform { lo, hi } => {
                    ParamValue::Real(rng.random_range(lo.ln()..hi.ln()).exp().clamp(*lo, *hi))
                }
                Dimension::Integer { lo, hi } => ParamValue::Int(rng.random_range(*lo..=*hi)),
                Dimension::Categorical { options } => {
                    ParamValue::Cat(options[rng.random_range(0..options.len())].clone())
                }
            };
            (name.clone(), v)
        })
        .collect();
    Assignment { values }
}

/// Mixture of Gaussians truncated to `[lo, hi]`: one kernel per observed
/// point plus a broad prior kernel at the midpoint.
struct Parzen {
    mus: Vec<f64>,
    sigmas: Vec<f64>,
    /// Normalizing mass of each kernel inside the bounds.
    mass: Vec<f64>,
    lo: f64,
    hi: f64,
}

fn norm_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

impl Parzen {
    fn new(points: &[f64], lo: f64, hi: f64) -> Self {
        let width = hi - lo;
        let mut mus: Vec<f64> = points.to_vec();
        mus.push(0.5 * (lo + hi));
        mus.sort_by(f64::total_cmp);
        let n = mus.len();
        let min_sigma = width / (100.0f64).min(n as f64 + 1.0);
        let sigmas: Vec<f64> = (0..n)
            .map(|i| {
                let left = if i == 0 { mus[0] - lo } else { mus[i] - mus[i - 1] };
                let right = if i + 1 == n { hi - mus[i] } else { mus[i + 1] - mus[i] };
                left.max(right).clamp(min_sigma, width)
            })
            .collect();
        // the prior kernel spans the whole range
        let prior = mus.iter().position(|&m| m == 0.5 * (lo + hi)).unwrap();
        let mut sigmas = sigmas;
        sigmas[prior] = width;
        let mass = mus
            .iter()
            .zip(&sigmas)
            .map(|(m, s)| (norm_cdf((hi - m) / s) - norm_cdf((lo - m) / s)).max(1e-300))
            .collect();
        Parzen { mus, sigmas, mass, lo, hi }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let k = rng.random_range(0..self.mus.len());
        let normal = Normal::new(self.mus[k], self.sigmas[k]).expect("positive sigma");
        for _ in 0..64 {
            let v = normal.sample(rng);
            if v >= self.lo && v <= self.hi {
                return v;
            }
        }
        self.mus[k].clamp(self.lo, self.hi)
    }

    fn log_density(&self, x: f64) -> f64 {
        let n = self.mus.len() as f64;
        let p: f64 = self
            .mus
            .iter()
            .zip(&self.sigmas)
            .zip(&self.mass)
            .map(|((m, s), z)| {
                let u = (x - m) / s;
                (-0.5 * u * u).exp() / (s * (2.0 * std::f64::consts::PI).sqrt() * z)
            })
            .sum::<f64>()
            / n;
        p.max(1e-300).ln()
    }
}

/// Smoothed category probabilities: observed counts plus one per option.
fn categorical_probs(options: &[String], observed: &[&str]) -> Vec<f64> {
    let mut counts = vec![1.0; options.len()];
    for o in observed {
        if let Some(i) = options.iter().position(|s| s == o) {
            counts[i] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    counts.into_iter().map(|c| c / total).collect()
}

/// Proposes the next assignment from the completed trials in `state`.
pub fn tpe_suggest<R: Rng + ?Sized>(state: &TpeState, space: &ParamSpace, rng: &mut R) -> Result<Assignment> {
    if !(state.gamma_q > 0.0 && state.gamma_q < 1.0) || state.n_candidates == 0 {
        return Err(Error::InvalidConfig("gamma_q must lie in (0,1) and n_candidates be positive".into()));
    }
    let mut done: Vec<(&Trial, f64)> = state
        .history
        .iter()
        .filter_map(|t| match (t.status, t.objective) {
            (TrialStatus::Complete, Some(o)) if o.is_finite() => Some((t, o)),
            _ => None,
        })
        .collect();
    if done.len() < 2 {
        return Err(Error::InsufficientHistory(format!("{} complete trials, need at least 2", done.len())));
    }
    done.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)));
    if done.first().map(|d| d.1) == done.last().map(|d| d.1) {
        return Ok(sample_random(space, rng));
    }
    let n_good = ((state.gamma_q * done.len() as f64).ceil() as usize).clamp(1, done.len() - 1);
    let (good, bad) = done.split_at(n_good);

    enum Model {
        Numeric { l: Parzen, g: Parzen },
        Cat { l: Vec<f64>, g: Vec<f64> },
    }
    let models: Vec<Model> = space
        .dims
        .iter()
        .map(|(name, d)| match d {
            Dimension::Categorical { options } => {
                let pick = |set: &[(&Trial, f64)]| -> Vec<f64> {
                    let obs: Vec<&str> = set
                        .iter()
                        .filter_map(|(t, _)| match t.params.get(name) {
                            Some(ParamValue::Cat(s)) => Some(s.as_str()),
                            _ => None,
                        })
                        .collect();
                    categorical_probs(options, &obs)
                };
                Model::Cat { l: pick(good), g: pick(bad) }
            }
            _ => {
                let (lo, hi) = d.working_bounds();
                let pts = |set: &[(&Trial, f64)]| -> Vec<f64> {
                    set.iter().filter_map(|(t, _)| t.params.get(name).and_then(|v| d.to_working(v))).collect()
                };
                Model::Numeric { l: Parzen::new(&pts(good), lo, hi), g: Parzen::new(&pts(bad), lo, hi) }
            }
        })
        .collect();

    let mut best: Option<(f64, Assignment)> = None;
    for _ in 0..state.n_candidates {
        let mut score = 0.0;
        let mut values = Vec::with_capacity(space.dims.len());
        for ((name, d), m) in space.dims.iter().zip(&models) {
            let v = match (m, d) {
                (Model::Cat { l, g }, Dimension::Categorical { options }) => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut k = options.len() - 1;
                    for (i, p) in l.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            k = i;
                            break;
                        }
                    }
                    score += l[k].ln() - g[k].ln();
                    ParamValue::Cat(options[k].clone())
                }
                (Model::Numeric { l, g }, _) => {
                    let w = l.sample(rng);
                    let v = d.decode(w);
                    let at = d.to_working(&v).expect("numeric value");
                    score += l.log_density(at) - g.log_density(at);
                    v
                }
                _ => unreachable!("model kind follows dimension kind"),
            };
            values.push((name.clone(), v));
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, Assignment { values }));
        }
    }
    Ok(best.expect("at least one candidate").1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    pub n_trials: usize,
    pub n_random: usize,
    pub seed: u64,
    pub gamma_q: f64,
    pub n_candidates: usize,
    /// Number of trials proposed from one history snapshot and evaluated
    /// concurrently; 1 is fully sequential.
    pub parallelism: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            n_trials: 1000,
            n_random: 100,
            seed: 0,
            gamma_q: DEFAULT_GAMMA_Q,
            n_candidates: DEFAULT_CANDIDATES,
            parallelism: 1,
        }
    }
}

/// Random stream used to propose trial `id`; makes the history independent
/// of how trials are batched.
fn trial_rng(seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

fn propose(space: &ParamSpace, cfg: &OptimizeConfig, history: &[Trial], id: usize) -> Result<Assignment> {
    let mut rng = trial_rng(cfg.seed, id);
    let complete = history.iter().filter(|t| t.status == TrialStatus::Complete).count();
    if id < cfg.n_random || complete < 2 {
        return Ok(sample_random(space, &mut rng));
    }
    let state = TpeState { history: history.to_vec(), gamma_q: cfg.gamma_q, n_candidates: cfg.n_candidates };
    tpe_suggest(&state, space, &mut rng)
}

fn record(id: usize, params: Assignment, outcome: Result<f64>) -> Trial {
    match outcome {
        Ok(v) if v.is_finite() => Trial::completed(id, params, v),
        _ => Trial { id, params, objective: None, status: TrialStatus::Failed },
    }
}

fn best_of(history: &[Trial]) -> Result<Trial> {
    history
        .iter()
        .filter(|t| t.status == TrialStatus::Complete)
        .min_by(|a, b| a.objective.unwrap().total_cmp(&b.objective.unwrap()).then(a.id.cmp(&b.id)))
        .cloned()
        .ok_or(Error::NoSuccessfulTrial)
}

/// Minimizes `objective` over `space`. Trials with ids below `n_random` are
/// sampled at random, the rest by TPE. `resume` seeds the history (ids must
/// be 0..len); the total number of trials is `cfg.n_trials`. Objective
/// errors and non-finite values are recorded as failed trials.
pub fn optimize<F>(
    mut objective: F,
    space: &ParamSpace,
    cfg: &OptimizeConfig,
    resume: Vec<Trial>,
) -> Result<(Trial, Vec<Trial>)>
where
    F: FnMut(&Assignment) -> Result<f64>,
{
    let mut history = check_resume(resume)?;
    while history.len() < cfg.n_trials {
        let id = history.len();
        let params = propose(space, cfg, &history, id)?;
        let outcome = objective(&params);
        history.push(record(id, params, outcome));
    }
    Ok((best_of(&history)?, history))
}

/// Like [`optimize`], but proposes `cfg.parallelism` trials against the same
/// history snapshot and evaluates them on scoped threads.
pub fn optimize_batched<F>(
    objective: F,
    space: &ParamSpace,
    cfg: &OptimizeConfig,
    resume: Vec<Trial>,
) -> Result<(Trial, Vec<Trial>)>
where
    F: Fn(&Assignment) -> Result<f64> + Sync,
{
    let p = cfg.parallelism.max(1);
    let mut history = check_resume(resume)?;
    while history.len() < cfg.n_trials {
        let start = history.len();
        let end = (start + p).min(cfg.n_trials);
        let batch: Vec<Assignment> =
            (start..end).map(|id| propose(space, cfg, &history, id)).collect::<Result<_>>()?;
        let outcomes: Vec<Result<f64>> = std::thread::scope(|s| {
            let handles: Vec<_> = batch.iter().map(|a| s.spawn(|| objective(a))).collect();
            handles.into_iter().map(|h| h.join().expect("objective panicked")).collect()
        });
        for (k, (params, outcome)) in batch.into_iter().zip(outcomes).enumerate() {
            history.push(record(start + k, params, outcome));
        }
    }
    Ok((best_of(&history)?, history))
}

fn check_resume(mut resume: Vec<Trial>) -> Result<Vec<Trial>> {
    resume.sort_by_key(|t| t.id);
    if resume.iter().enumerate().any(|(i, t)| t.id != i) {
        return Err(Error::InvalidArgument("resumed history must hold trial ids 0..n".into()));
    }
    Ok(resume)
}

/// Best objective seen up to and including each trial (failed trials carry
/// the previous value; `inf` before the first success).
pub fn best_so_far(history: &[Trial]) -> Vec<f64> {
    let mut best = f64::INFINITY;
    history
        .iter()
        .map(|t| {
            if let Some(o) = t.objective {
                best = best.min(o);
            }
            best
        })
        .collect()
}

pub fn write_history<W: Write>(w: W, space: &ParamSpace, history: &[Trial]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["trial_id".to_string(), "status".into(), "objective".into()];
    header.extend(space.dims.iter().map(|(n, _)| n.clone()));
    wr.write_record(&header)?;
    for t in history {
        let mut rec = vec![
            t.id.to_string(),
            match t.status {
                TrialStatus::Complete => "complete".to_string(),
                TrialStatus::Failed => "failed".to_string(),
            },
            t.objective.map(|o| o.to_string()).unwrap_or_default(),
        ];
        for (name, _) in &space.dims {
            rec.push(t.params.get(name).map(|v| v.to_string()).unwrap_or_default());
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_history<R: Read>(r: R, space: &ParamSpace) -> Result<Vec<Trial>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let pos = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse(format!("history lacks column `{name}`")))
    };
    let (ci, cs, co) = (pos("trial_id")?, pos("status")?, pos("objective")?);
    let cols: Vec<usize> = space.dims.iter().map(|(n, _)| pos(n)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let id = rec[ci].parse().map_err(|_| Error::Parse(format!("bad trial id `{}`", &rec[ci])))?;
        let status = match &rec[cs] {
            "complete" => TrialStatus::Complete,
            "failed" => TrialStatus::Failed,
            s => return Err(Error::Parse(format!("unknown trial status `{s}`"))),
        };
        let objective = match (status, &rec[co]) {
            (TrialStatus::Complete, s) => {
                Some(s.parse::<f64>().map_err(|_| Error::Parse(format!("bad objective `{s}`")))?)
            }
            (TrialStatus::Failed, _) => None,
        };
        let values = space
            .dims
            .iter()
            .zip(&cols)
            .map(|((n, d), &c)| Ok((n.clone(), d.parse(&rec[c])?)))
            .collect::<Result<_>>()?;
        out.push(Trial { id, params: Assignment { values }, objective, status });
    }
    Ok(out)
}

fn dim(name: &str, d: Dimension) -> (String, Dimension) {
    (name.to_string(), d)
}

/// Learning rate, γ, depth, rounds, row and column subsampling.
pub fn gbt_space() -> ParamSpace {
    ParamSpace::new(vec![
        dim("learning_rate", Dimension::LogUniform { lo: 1e-3, hi: 0.5 }),
        dim("gamma", Dimension::Uniform { lo: 0.0, hi: 10.0 }),
        dim("max_depth", Dimension::Integer { lo: 2, hi: 12 }),
        dim("n_estimators", Dimension::Integer { lo: 50, hi: 1000 }),
        dim("subsample", Dimension::Uniform { lo: 0.5, hi: 1.0 }),
        dim("colsample_bytree", Dimension::Uniform { lo: 0.5, hi: 1.0 }),
    ])
    .expect("valid space")
}

/// Depth, width, learning rate, batch size, L2 penalty and training loss.
pub fn mlp_space() -> ParamSpace {
    let cats = |v: &[&str]| Dimension::Categorical { options: v.iter().map(|s| s.to_string()).collect() };
    ParamSpace::new(vec![
        dim("hidden_layers", Dimension::Integer { lo: 1, hi: 8 }),
        dim("width", Dimension::Integer { lo: 16, hi: 8192 }),
        dim("learning_rate", Dimension::LogUniform { lo: 1e-5, hi: 1e-2 }),
        dim("batch_size", cats(&["128", "512", "2048"])),
        dim("l2_penalty", Dimension::LogUniform { lo: 1e-8, hi: 1e-2 }),
        dim("loss", cats(&["mae", "mse", "huber", "logcosh"])),
    ])
    .expect("valid space")
}

/// Overlays the searched GBT dimensions present in `a` onto `base`.
pub fn gbt_config_from(a: &Assignment, base: &GbtConfig) -> Result<GbtConfig> {
    let mut c = *base;
    if a.get("learning_rate").is_some() {
        c.learning_rate = a.real("learning_rate")?;
    }
    if a.get("gamma").is_some() {
        c.gamma = a.real("gamma")?;
    }
    if a.get("max_depth").is_some() {
        c.max_depth = a.int("max_depth")? as usize;
    }
    if a.get("n_estimators").is_some() {
        c.n_estimators = a.int("n_estimators")? as usize;
    }
    if a.get("subsample").is_some() {
        c.subsample = a.real("subsample")?;
    }
    if a.get("colsample_bytree").is_some() {
        c.colsample_bytree = a.real("colsample_bytree")?;
    }
    Ok(c)
}

/// Overlays the searched MLP dimensions present in `a` onto the base
/// architecture and training configuration.
pub fn mlp_config_from(
    a: &Assignment,
    arch: &MlpArch,
    train: &MlpTrainConfig,
) -> Result<(MlpArch, MlpTrainConfig)> {
    let (mut arch, mut train) = (*arch, *train);
    if a.get("hidden_layers").is_some() {
        arch.hidden_layers = a.int("hidden_layers")? as usize;
    }
    if a.get("width").is_some() {
        arch.width = a.int("width")? as usize;
    }
    if a.get("learning_rate").is_some() {
        train.learning_rate = a.real("learning_rate")?;
    }
    if a.get("batch_size").is_some() {
        train.batch_size = a.cat("batch_size")?.parse().map_err(|_| Error::InvalidConfig("batch_size".into()))?;
    }
    if a.get("l2_penalty").is_some() {
        train.l2_penalty = a.real("l2_penalty")?;
    }
    if a.get("loss").is_some() {
        train.loss = a.cat("loss")?.parse::<LossKind>()?;
    }
    Ok((arch, train))
}
