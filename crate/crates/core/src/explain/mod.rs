//! Feature attribution: permutation importance, Shapley values (exact for
//! tree ensembles, sampled for any model) and split-gain importance.

pub mod tree_shap;

use std::fmt;
use std::io::Write;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::rmse;
use crate::models::{GbtModel, Regressor};

pub use tree_shap::{expected_value, tree_expectation, tree_shap};

pub const DEFAULT_REPEATS: usize = 5;
pub const DEFAULT_BACKGROUND: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImportanceMethod {
    Permutation,
    Shap,
    Gain,
}

impl ImportanceMethod {
    pub fn name(self) -> &'static str {
        match self {
            ImportanceMethod::Permutation => "permutation",
            ImportanceMethod::Shap => "shap",
            ImportanceMethod::Gain => "gain",
        }
    }
}

impl fmt::Display for ImportanceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub method: ImportanceMethod,
    pub features: Vec<String>,
    pub scores: Vec<f64>,
    pub warning: Option<String>,
}

/// 1-based ranks, highest score first; ties keep feature order.
pub fn ranks(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut r = vec![0; scores.len()];
    for (k, &i) in order.iter().enumerate() {
        r[i] = k + 1;
    }
    r
}

impl ImportanceReport {
    pub fn ranks(&self) -> Vec<usize> {
        ranks(&self.scores)
    }

    pub fn score(&self, feature: &str) -> Option<f64> {
        self.features.iter().position(|f| f == feature).map(|i| self.scores[i])
    }
}

/// Writes reports as `feature,method,score,rank`.
pub fn write_importance_csv<W: Write>(w: W, reports: &[ImportanceReport]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["feature", "method", "score", "rank"])?;
    for rep in reports {
        for ((f, s), r) in rep.features.iter().zip(&rep.scores).zip(rep.ranks()) {
            wr.write_record([f.as_str(), rep.method.name(), &s.to_string(), &r.to_string()])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Mean increase in RMSE when one column is shuffled, over `repeats`
/// shuffles per column.
pub fn permutation_importance<M: Regressor + ?Sized, R: Rng + ?Sized>(
    model: &M,
    x: &Array2<f64>,
    y: &[f64],
    features: &[String],
    repeats: usize,
    rng: &mut R,
) -> Result<ImportanceReport> {
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(Error::Alignment(format!("{n} rows vs {} targets", y.len())));
    }
    if features.len() != p || repeats == 0 {
        return Err(Error::InvalidArgument("one name per column and at least one repeat required".into()));
    }
    let base = rmse(y, &model.predict(x)?)?;
    let mut work = x.to_owned();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut scores = Vec::with_capacity(p);
    for j in 0..p {
        let original = x.column(j).to_owned();
        let mut total = 0.0;
        for _ in 0..repeats {
            perm.shuffle(rng);
            for (i, &src) in perm.iter().enumerate() {
                work[[i, j]] = original[src];
            }
            total += rmse(y, &model.predict(&work)?)? - base;
        }
        work.column_mut(j).assign(&original);
        scores.push(total / repeats as f64);
    }
    Ok(ImportanceReport { method: ImportanceMethod::Permutation, features: features.to_vec(), scores, warning: None })
}

/// Per-feature total split gain, normalized to sum to one.
pub fn gain_importance(model: &GbtModel, features: &[String]) -> Result<ImportanceReport> {
    if features.len() != model.n_features {
        return Err(Error::FeatureMismatch { expected: model.n_features, got: features.len() });
    }
    let mut scores = vec![0.0; model.n_features];
    for t in &model.trees {
        for (f, _, gain) in t.splits() {
            scores[f] += gain;
        }
    }
    let total: f64 = scores.iter().sum();
    let warning = if total > 0.0 {
        scores.iter_mut().for_each(|s| *s /= total);
        None
    } else {
        let msg = "ensemble has no splits; gain importance is zero for every feature".to_string();
        log::warn!("{msg}");
        Some(msg)
    };
    Ok(ImportanceReport { method: ImportanceMethod::Gain, features: features.to_vec(), scores, warning })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapExplanation {
    pub base_value: f64,
    pub contributions: Vec<f64>,
    /// Monte-Carlo standard errors, present for sampled estimates.
    pub std_errors: Option<Vec<f64>>,
}

impl ShapExplanation {
    /// `base_value + Σ contributions`.
    pub fn reconstructed(&self) -> f64 {
        self.base_value + self.contributions.iter().sum::<f64>()
    }
}

/// Monte-Carlo Shapley values: each sample draws a feature permutation and
/// a background row, then switches features from the background value to
/// `x` in permutation order, crediting each change in output to the
/// switched feature.
pub fn sampled_shap<M: Regressor + ?Sized, R: Rng + ?Sized>(
    model: &M,
    x: &[f64],
    background: &Array2<f64>,
    n_samples: usize,
    rng: &mut R,
) -> Result<ShapExplanation> {
    let p = model.n_features();
    if x.len() != p || background.ncols() != p {
        return Err(Error::FeatureMismatch { expected: p, got: x.len().max(background.ncols()) });
    }
    if background.nrows() == 0 || n_samples == 0 {
        return Err(Error::InvalidArgument("sampled Shapley needs background rows and samples".into()));
    }
    let base_value = model.predict(background)?.iter().sum::<f64>() / background.nrows() as f64;
    let mut sum = vec![0.0; p];
    let mut sum_sq = vec![0.0; p];
    let mut order: Vec<usize> = (0..p).collect();
    let mut v = vec![0.0; p];
    for _ in 0..n_samples {
        order.shuffle(rng);
        let z = background.row(rng.random_range(0..background.nrows()));
        v.iter_mut().zip(z.iter()).for_each(|(a, b)| *a = *b);
        let mut prev = model.predict_row(&v);
        for &j in &order {
            v[j] = x[j];
            let cur = model.predict_row(&v);
            let d = cur - prev;
            sum[j] += d;
            sum_sq[j] += d * d;
            prev = cur;
        }
    }
    let n = n_samples as f64;
    let contributions: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_errors = sum_sq
        .iter()
        .zip(&contributions)
        .map(|(sq, m)| if n > 1.0 { ((sq / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt() } else { f64::INFINITY })
        .collect();
    Ok(ShapExplanation { base_value, contributions, std_errors: Some(std_errors) })
}

/// Mean absolute contribution per feature.
pub fn shap_importance(explanations: &[ShapExplanation], features: &[String]) -> Result<ImportanceReport> {
    let p = features.len();
    if explanations.iter().any(|e| e.contributions.len() != p) {
        return Err(Error::FeatureMismatch { expected: p, got: explanations[0].contributions.len() });
    }
    let n = explanations.len().max(1) as f64;
    let scores = (0..p).map(|j| explanations.iter().map(|e| e.contributions[j].abs()).sum::<f64>() / n).collect();
    Ok(ImportanceReport { method: ImportanceMethod::Shap, features: features.to_vec(), scores, warning: None })
}

/// Importance from several methods on a common [0, 1] scale.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedImportance {
    pub features: Vec<String>,
    pub methods: Vec<ImportanceMethod>,
    /// `normalized[m][j]`: method `m`'s min-max scaled score for feature `j`.
    pub normalized: Vec<Vec<f64>>,
    pub total: Vec<f64>,
}

fn min_max(scores: &[f64]) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .map(|&s| {
            if hi > lo {
                (s - lo) / (hi - lo)
            } else if hi > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Min-max scales each report over features and sums across methods.
pub fn stacked_importance(reports: &[ImportanceReport]) -> Result<StackedImportance> {
    let first = reports.first().ok_or_else(|| Error::InvalidArgument("no importance reports".into()))?;
    if reports.iter().any(|r| r.features != first.features) {
        return Err(Error::InvalidArgument("importance reports cover different features".into()));
    }
    let normalized: Vec<Vec<f64>> = reports.iter().map(|r| min_max(&r.scores)).collect();
    let total = (0..first.features.len()).map(|j| normalized.iter().map(|m| m[j]).sum()).collect();
    Ok(StackedImportance {
        features: first.features.clone(),
        methods: reports.iter().map(|r| r.method).collect(),
        normalized,
        total,
    })
}

impl StackedImportance {
    /// Ranks by summed normalized score.
    pub fn ranks(&self) -> Vec<usize> {
        ranks(&self.total)
    }

    /// Features sorted from greatest to least summed importance.
    pub fn ordered(&self) -> Vec<(&str, f64)> {
        let r = self.ranks();
        let mut out: Vec<(usize, &str, f64)> =
            self.features.iter().zip(&self.total).zip(r).map(|((f, t), r)| (r, f.as_str(), *t)).collect();
        out.sort_by_key(|e| e.0);
        out.into_iter().map(|(_, f, t)| (f, t)).collect()
    }

    /// `feature,method,score,rank` with one row per method plus a `sum` row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["feature", "method", "score", "rank"])?;
        for (m, scores) in self.methods.iter().zip(&self.normalized) {
            for ((f, s), r) in self.features.iter().zip(scores).zip(ranks(scores)) {
                wr.write_record([f.as_str(), m.name(), &s.to_string(), &r.to_string()])?;
            }
        }
        for ((f, s), r) in self.features.iter().zip(&self.total).zip(self.ranks()) {
            wr.write_record([f.as_str(), "sum", &s.to_string(), &r.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }
}
