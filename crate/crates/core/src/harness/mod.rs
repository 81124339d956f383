//! Orchestration: ingesting a fixture directory, k-fold cross-validation,
//! the 31-mask group ablation, hyperparameter search and model explanation.

pub mod cli;
pub mod manifest;

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::climatology::{build_climatology, ClimatologyKind, ClimatologyTable};
use crate::error::{Error, Result};
use crate::explain::{
    gain_importance, permutation_importance, sampled_shap, shap_importance, stacked_importance, tree_shap,
    ImportanceReport, ShapExplanation, StackedImportance, DEFAULT_BACKGROUND, DEFAULT_REPEATS,
};
use crate::hpo::{
    gbt_config_from, gbt_space, mlp_config_from, mlp_space, optimize_batched, Assignment, OptimizeConfig, ParamValue,
    Trial,
};
use crate::ingest::{
    assign_nearest_hour, block_average, build_training_table, dedupe_sites, read_field_stack, read_observations,
    read_sites, ChangelogEntry, FmcObservation, GridField,
};
use crate::metrics::{grouped_metrics, mean_std, GroupKey, GroupedMetrics, MetricReport};
use crate::models::{FnRegressor, ModelBundle, ModelConfig, ModelKind};
use crate::split::{make_folds, split, FoldSet, Fractions, SplitAssignment, SplitStrategy};
use crate::tabular::{select_groups, Dataset, FeatureGroup, GroupMask, Schema, TARGET};

pub use manifest::RunManifest;

/// Block factor between the fine and coarse grids.
pub const COARSE_FACTOR: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolution {
    #[serde(rename = "375m")]
    Fine,
    #[serde(rename = "2250m")]
    Coarse,
}

impl FromStr for Resolution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim_end_matches('m') {
            "375" => Ok(Resolution::Fine),
            "2250" => Ok(Resolution::Coarse),
            _ => Err(Error::Parse(format!("unknown resolution `{s}`; expected 375 or 2250"))),
        }
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolution::Fine => "375m",
            Resolution::Coarse => "2250m",
        })
    }
}

/// Reads every `*.csv` field stack in `dir`, in file-name order.
pub fn read_field_dir(dir: &Path) -> Result<Vec<GridField>> {
    let mut paths: Vec<_> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        out.extend(read_field_stack(BufReader::new(File::open(&p)?))?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    /// QC-passing observations before the era boundary (all of them when no
    /// boundary is given), the climatology's input.
    pub clim_observations: Vec<FmcObservation>,
    pub changelog: Vec<ChangelogEntry>,
    pub n_observations: usize,
    pub n_qc_failed: usize,
}

/// Builds the training table from a fixture directory holding `sites.csv`,
/// `observations.csv` and `fields/*.csv`. Observations whose hour falls
/// before `era_end` feed only the climatology; the rest form the table.
pub fn ingest_dir(dir: &Path, resolution: Resolution, era_end: Option<DateTime<Utc>>) -> Result<Ingested> {
    let raw_sites = read_sites(BufReader::new(File::open(dir.join("sites.csv"))?))?;
    let (sites, changelog) = dedupe_sites(&raw_sites);
    let obs = read_observations(BufReader::new(File::open(dir.join("observations.csv"))?))?;
    let mut fields = read_field_dir(&dir.join("fields"))?;
    if resolution == Resolution::Coarse {
        fields = fields.iter().map(|f| block_average(f, COARSE_FACTOR)).collect::<Result<_>>()?;
    }
    let n_qc_failed = obs.iter().filter(|o| !o.qc_pass).count();
    let (clim_observations, table_obs): (Vec<FmcObservation>, Vec<FmcObservation>) = match era_end {
        None => (obs.iter().filter(|o| o.qc_pass).cloned().collect(), obs.clone()),
        Some(t) => {
            let (before, after): (Vec<_>, Vec<_>) = obs.iter().cloned().partition(|o| assign_nearest_hour(o.timestamp) < t);
            (before.into_iter().filter(|o| o.qc_pass).collect(), after)
        }
    };
    let dataset = build_training_table(&table_obs, &sites, &fields, &Schema::default_fmc())?;
    Ok(Ingested { dataset, clim_observations, changelog, n_observations: obs.len(), n_qc_failed })
}

/// DOY and DOY-HR tables from the same observations.
pub fn build_baselines(obs: &[FmcObservation]) -> Result<[ClimatologyTable; 2]> {
    Ok([build_climatology(obs, ClimatologyKind::Doy)?, build_climatology(obs, ClimatologyKind::DoyHr)?])
}

/// All 31 non-empty group masks, ordered by their bit key from `00001` to
/// `11111`.
pub fn enumerate_group_masks() -> Vec<GroupMask> {
    (1u8..32)
        .map(|code| {
            GroupMask::from_groups(FeatureGroup::ALL.into_iter().enumerate().filter(|(i, _)| code >> (4 - i) & 1 == 1).map(|(_, g)| g))
        })
        .collect()
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_add(fold as u64)
}

/// Runs `f` over `0..n` on scoped threads (at most the available
/// parallelism at a time), returning results in index order.
fn parallel_map<T: Send, F: Fn(usize) -> T + Sync>(n: usize, f: F) -> Vec<T> {
    let width = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1).max(1);
    let mut out = Vec::with_capacity(n);
    let f = &f;
    for start in (0..n).step_by(width) {
        let end = (start + width).min(n);
        std::thread::scope(|s| {
            let handles: Vec<_> = (start..end).map(|i| s.spawn(move || f(i))).collect();
            out.extend(handles.into_iter().map(|h| h.join().expect("worker panicked")));
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub model: ModelConfig,
    pub strategy: SplitStrategy,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub val_rmse: f64,
    pub test: MetricReport,
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub config: CvConfig,
    pub split: SplitAssignment,
    pub folds: FoldSet,
    pub fold_results: Vec<FoldResult>,
    pub models: Vec<ModelBundle>,
    /// Per-fold test predictions, aligned with `folds.test`.
    pub test_predictions: Vec<Vec<f64>>,
}

impl CvResult {
    /// Mean and population std of test RMSE over folds.
    pub fn rmse(&self) -> (f64, f64) {
        mean_std(&self.fold_results.iter().map(|f| f.test.rmse).collect::<Vec<_>>())
    }

    /// Mean and std of test r2 over folds (NaN when undefined).
    pub fn r2(&self) -> (f64, f64) {
        mean_std(&self.fold_results.iter().map(|f| f.test.r2.unwrap_or(f64::NAN)).collect::<Vec<_>>())
    }

    /// Average of the fold models' test predictions.
    pub fn mean_test_predictions(&self) -> Vec<f64> {
        let k = self.test_predictions.len() as f64;
        (0..self.folds.test.len()).map(|i| self.test_predictions.iter().map(|p| p[i]).sum::<f64>() / k).collect()
    }

    pub fn write_folds_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["fold", "n_train", "n_val", "n_test", "val_rmse", "test_rmse", "test_r2"])?;
        for f in &self.fold_results {
            wr.write_record([
                f.fold.to_string(),
                f.n_train.to_string(),
                f.n_val.to_string(),
                f.test.n.to_string(),
                f.val_rmse.to_string(),
                f.test.rmse.to_string(),
                f.test.r2.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// `metric,mean,std,folds`.
    pub fn write_summary_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["metric", "mean", "std", "folds"])?;
        let k = self.fold_results.len().to_string();
        for (name, (m, s)) in [("rmse", self.rmse()), ("r2", self.r2())] {
            wr.write_record([name, &m.to_string(), &s.to_string(), &k])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Fold-mean test predictions: `row_index,site_id,timestamp,fmc,prediction`.
    pub fn write_predictions_csv<W: Write>(&self, w: W, ds: &Dataset) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["row_index", "site_id", "timestamp", "fmc", "prediction"])?;
        let y = ds.target_vector(Some(&self.folds.test))?;
        for ((&r, p), yv) in self.folds.test.iter().zip(self.mean_test_predictions()).zip(y) {
            wr.write_record([
                r.to_string(),
                ds.site_id(r).to_string(),
                crate::tabular::format_timestamp(ds.timestamp(r)),
                yv.to_string(),
                p.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// k-fold cross-validation around one fixed test set. Each fold fits its
/// own standardizer on its training rows, trains on them (the MLP also
/// uses the fold's validation rows) and is scored on the shared test rows.
pub fn run_cv(ds: &Dataset, cfg: &CvConfig) -> Result<CvResult> {
    let assignment = split(ds, cfg.strategy, Fractions::default(), cfg.seed)?;
    let folds = make_folds(ds, &assignment, cfg.folds, cfg.seed)?;
    let test_ds = ds.take_rows(&folds.test);
    let y_test = test_ds.target_vector(None)?;
    let outcomes = parallel_map(folds.k(), |i| -> Result<(FoldResult, ModelBundle, Vec<f64>)> {
        let fold = &folds.folds[i];
        let train = ds.take_rows(&fold.train);
        let val = ds.take_rows(&fold.val);
        let bundle = ModelBundle::fit(&train, &val, &cfg.model, fold_seed(cfg.seed, i))?;
        let val_pred = bundle.predict(&val)?;
        let val_rmse = crate::metrics::rmse(&val.target_vector(None)?, &val_pred)?;
        let pred = bundle.predict(&test_ds)?;
        let test = MetricReport::on_rows(&y_test, &pred, &folds.test)?;
        let res = FoldResult { fold: i, n_train: fold.train.len(), n_val: fold.val.len(), val_rmse, test };
        Ok((res, bundle, pred))
    });
    let mut fold_results = Vec::with_capacity(folds.k());
    let mut models = Vec::with_capacity(folds.k());
    let mut test_predictions = Vec::with_capacity(folds.k());
    for o in outcomes {
        let (r, m, p) = o?;
        fold_results.push(r);
        models.push(m);
        test_predictions.push(p);
    }
    Ok(CvResult { config: cfg.clone(), split: assignment, folds, fold_results, models, test_predictions })
}

/// Per-site and per-month metrics and skills of the fold-mean test
/// predictions against the given baselines.
pub fn cv_skill_tables(ds: &Dataset, cv: &CvResult, clims: &[&ClimatologyTable]) -> Result<[GroupedMetrics; 2]> {
    let test = ds.take_rows(&cv.folds.test);
    let pred = cv.mean_test_predictions();
    Ok([
        grouped_metrics(&test, &pred, clims, GroupKey::Site, None)?,
        grouped_metrics(&test, &pred, clims, GroupKey::Month, None)?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub mask: GroupMask,
    pub n_rows: usize,
    pub n_test: usize,
    pub rmse: (f64, f64),
    pub r2: (f64, f64),
    /// Why the mask has no result, if it failed.
    pub missing: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationResult {
    pub strategy: SplitStrategy,
    /// One row per mask, sorted by mean r2 (highest first); masks without a
    /// result come last in key order.
    pub rows: Vec<AblationRow>,
}

impl AblationResult {
    pub fn get(&self, mask: GroupMask) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.mask == mask)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["mask", "split", "n_rows", "n_test", "rmse_mean", "rmse_std", "r2_mean", "r2_std", "missing"])?;
        for r in &self.rows {
            let num = |v: f64| if r.missing.is_some() { String::new() } else { v.to_string() };
            wr.write_record([
                r.mask.key(),
                self.strategy.to_string(),
                r.n_rows.to_string(),
                r.n_test.to_string(),
                num(r.rmse.0),
                num(r.rmse.1),
                num(r.r2.0),
                num(r.r2.1),
                r.missing.clone().unwrap_or_default(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Cross-validates one model configuration on every group mask.
pub fn run_ablation(ds: &Dataset, model: &ModelConfig, strategy: SplitStrategy, folds: usize, seed: u64) -> Result<AblationResult> {
    let cfg = CvConfig { model: model.clone(), strategy, folds, seed };
    let mut rows = Vec::with_capacity(31);
    for mask in enumerate_group_masks() {
        let outcome = select_groups(ds, mask).and_then(|sub| Ok((sub.n_rows(), run_cv(&sub, &cfg)?)));
        rows.push(match outcome {
            Ok((n_rows, cv)) => AblationRow { mask, n_rows, n_test: cv.folds.test.len(), rmse: cv.rmse(), r2: cv.r2(), missing: None },
            Err(e) => {
                log::warn!("mask {mask}: {e}");
                AblationRow { mask, n_rows: 0, n_test: 0, rmse: (f64::NAN, f64::NAN), r2: (f64::NAN, f64::NAN), missing: Some(e.to_string()) }
            }
        });
    }
    rows.sort_by(|a, b| match (a.missing.is_some(), b.missing.is_some()) {
        (false, false) => b.r2.0.total_cmp(&a.r2.0).then(a.mask.key().cmp(&b.mask.key())),
        (x, y) => x.cmp(&y).then(a.mask.key().cmp(&b.mask.key())),
    });
    Ok(AblationResult { strategy, rows })
}

#[derive(Debug, Clone)]
pub struct HpoOutcome {
    pub best: Trial,
    pub history: Vec<Trial>,
    pub best_config: ModelConfig,
    pub cv: CvResult,
}

/// Searched dimensions and the base configuration they overlay.
fn space_for(kind: ModelKind) -> Result<crate::hpo::ParamSpace> {
    match kind {
        ModelKind::Gbt => Ok(gbt_space()),
        ModelKind::Mlp => Ok(mlp_space()),
        ModelKind::Lr => Err(Error::InvalidArgument("linear regression has no hyperparameters to search".into())),
    }
}

pub fn config_from(a: &Assignment, base: &ModelConfig) -> Result<ModelConfig> {
    Ok(match base {
        ModelConfig::Gbt(g) => ModelConfig::Gbt(gbt_config_from(a, g)?),
        ModelConfig::Mlp { arch, train } => {
            let (arch, train) = mlp_config_from(a, arch, train)?;
            ModelConfig::Mlp { arch, train }
        }
        ModelConfig::Linear => return Err(Error::InvalidArgument("linear regression has no hyperparameters".into())),
    })
}

/// The base configuration expressed in the search space, evaluated as the
/// first trial so the search never ends worse than the defaults.
fn default_assignment(base: &ModelConfig) -> Option<Assignment> {
    let r = |k: &str, v: f64| (k.to_string(), ParamValue::Real(v));
    let i = |k: &str, v: usize| (k.to_string(), ParamValue::Int(v as i64));
    let c = |k: &str, v: String| (k.to_string(), ParamValue::Cat(v));
    let a = match base {
        ModelConfig::Gbt(g) => Assignment {
            values: vec![
                r("learning_rate", g.learning_rate),
                r("gamma", g.gamma),
                i("max_depth", g.max_depth),
                i("n_estimators", g.n_estimators),
                r("subsample", g.subsample),
                r("colsample_bytree", g.colsample_bytree),
            ],
        },
        ModelConfig::Mlp { arch, train } => Assignment {
            values: vec![
                i("hidden_layers", arch.hidden_layers),
                i("width", arch.width),
                r("learning_rate", train.learning_rate),
                c("batch_size", train.batch_size.to_string()),
                r("l2_penalty", train.l2_penalty.max(1e-8)),
                c("loss", train.loss.name().to_string()),
            ],
        },
        ModelConfig::Linear => return None,
    };
    Some(a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpoConfig {
    pub base: ModelConfig,
    pub strategy: SplitStrategy,
    pub budget: usize,
    pub folds: usize,
    pub seed: u64,
    /// Trials evaluated concurrently against one history snapshot.
    pub parallelism: usize,
}

/// Minimizes fold-0 validation RMSE over the model's search space, then
/// cross-validates the winner. The base configuration is trial 0 when it
/// lies inside the space.
pub fn run_hpo(ds: &Dataset, cfg: &HpoConfig) -> Result<HpoOutcome> {
    if cfg.budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let space = space_for(cfg.base.kind())?;
    let assignment = split(ds, cfg.strategy, Fractions::default(), cfg.seed)?;
    let folds = make_folds(ds, &assignment, cfg.folds.max(1), cfg.seed)?;
    let train = ds.take_rows(&folds.folds[0].train);
    let val = ds.take_rows(&folds.folds[0].val);
    let y_val = val.target_vector(None)?;
    let objective = |a: &Assignment| -> Result<f64> {
        let mc = config_from(a, &cfg.base)?;
        let bundle = ModelBundle::fit(&train, &val, &mc, cfg.seed)?;
        crate::metrics::rmse(&y_val, &bundle.predict(&val)?)
    };
    let mut resume = Vec::new();
    if cfg.budget > 1 {
        if let Some(a) = default_assignment(&cfg.base).filter(|a| space.contains(a)) {
            let v = objective(&a);
            resume.push(match v {
                Ok(v) if v.is_finite() => Trial::completed(0, a, v),
                _ => Trial { id: 0, params: a, objective: None, status: crate::hpo::TrialStatus::Failed },
            });
        }
    }
    let opt = OptimizeConfig {
        n_trials: cfg.budget,
        n_random: cfg.budget.min(100).min((cfg.budget / 5).max(1)),
        seed: cfg.seed,
        parallelism: cfg.parallelism.max(1),
        ..Default::default()
    };
    let (best, history) = optimize_batched(objective, &space, &opt, resume)?;
    let best_config = config_from(&best.params, &cfg.base)?;
    let cv = run_cv(ds, &CvConfig { model: best_config.clone(), strategy: cfg.strategy, folds: cfg.folds, seed: cfg.seed })?;
    Ok(HpoOutcome { best, history, best_config, cv })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    /// Rows explained individually with Shapley values.
    pub n_rows: usize,
    pub repeats: usize,
    pub background: usize,
    /// Permutation samples per row for model-agnostic Shapley values.
    pub shap_samples: usize,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig { n_rows: 200, repeats: DEFAULT_REPEATS, background: DEFAULT_BACKGROUND, shap_samples: 200, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Explanation {
    pub features: Vec<String>,
    pub reports: Vec<ImportanceReport>,
    pub stacked: StackedImportance,
    /// (row index into the explained dataset, attribution in FMC units).
    pub rows: Vec<(usize, ShapExplanation)>,
}

impl Explanation {
    /// `row_index,base_value,<feature...>` in FMC units.
    pub fn write_shap_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["row_index".to_string(), "base_value".to_string()];
        header.extend(self.features.iter().cloned());
        wr.write_record(&header)?;
        for (r, e) in &self.rows {
            let mut rec = vec![r.to_string(), e.base_value.to_string()];
            rec.extend(e.contributions.iter().map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Summed absolute Shapley contribution per feature group.
    pub fn group_shap(&self, schema: &Schema) -> Vec<(FeatureGroup, f64)> {
        let n = self.rows.len().max(1) as f64;
        FeatureGroup::ALL
            .into_iter()
            .filter_map(|g| {
                let idx: Vec<usize> =
                    self.features.iter().enumerate().filter(|(_, f)| schema.get(f).map(|c| c.group) == Some(g)).map(|(j, _)| j).collect();
                if idx.is_empty() {
                    return None;
                }
                let total = self.rows.iter().map(|(_, e)| idx.iter().map(|&j| e.contributions[j]).sum::<f64>().abs()).sum::<f64>();
                Some((g, total / n))
            })
            .collect()
    }
}

fn sample_rows(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        idx.shuffle(rng);
        idx.truncate(k);
        idx.sort_unstable();
    }
    idx
}

/// Permutation importance on `target`, Shapley values for a sample of its
/// rows (exact for boosted trees, sampled against `background` otherwise)
/// and split gain for boosted trees, all in FMC units.
pub fn explain_bundle(bundle: &ModelBundle, target: &Dataset, background: &Dataset, cfg: &ExplainConfig) -> Result<Explanation> {
    let names: Vec<&str> = bundle.features.iter().map(|s| s.as_str()).collect();
    let features = bundle.features.clone();
    let ystd = bundle.standardizer.require(TARGET)?.clone();
    let standardized = |ds: &Dataset| -> Result<Array2<f64>> {
        let mut x = ds.feature_matrix(None)?;
        bundle.standardizer.transform_matrix(&mut x, &names)?;
        Ok(x)
    };
    let x = standardized(target)?;
    let y = target.target_vector(None)?;
    let model = &bundle.model;
    let in_fmc = FnRegressor { n_features: features.len(), f: |row: &[f64]| ystd.inverse(crate::models::Regressor::predict_row(model, row)) };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reports = vec![permutation_importance(&in_fmc, &x, &y, &features, cfg.repeats, &mut rng)?];

    let rows = sample_rows(target.n_rows(), cfg.n_rows, &mut rng);
    let mut explained = Vec::with_capacity(rows.len());
    match model.as_gbt() {
        Some(gbt) => {
            for &r in &rows {
                let e = tree_shap(gbt, x.row(r).as_slice().expect("standard layout"))?;
                explained.push((
                    r,
                    ShapExplanation {
                        base_value: ystd.inverse(e.base_value),
                        contributions: e.contributions.iter().map(|c| c * ystd.std).collect(),
                        std_errors: None,
                    },
                ));
            }
        }
        None => {
            let bx = standardized(background)?;
            let pick = sample_rows(bx.nrows(), cfg.background, &mut rng);
            let bg = bx.select(ndarray::Axis(0), &pick);
            for &r in &rows {
                let e = sampled_shap(&in_fmc, x.row(r).as_slice().expect("standard layout"), &bg, cfg.shap_samples, &mut rng)?;
                explained.push((r, e));
            }
        }
    }
    let shap_list: Vec<ShapExplanation> = explained.iter().map(|(_, e)| e.clone()).collect();
    reports.push(shap_importance(&shap_list, &features)?);
    if let Some(gbt) = model.as_gbt() {
        let g = gain_importance(gbt, &features)?;
        if let Some(w) = &g.warning {
            log::warn!("{w}");
        }
        reports.push(g);
    }
    let stacked = stacked_importance(&reports)?;
    Ok(Explanation { features, reports, stacked, rows: explained })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masks_are_the_31_nonempty_subsets() {
        let m = enumerate_group_masks();
        assert_eq!(m.len(), 31);
        let keys: Vec<String> = m.iter().map(|g| g.key()).collect();
        assert_eq!(keys[0], "00001");
        assert_eq!(keys[30], "11111");
        assert!(keys.contains(&"01111".to_string()));
        assert!(!keys.contains(&"00000".to_string()));
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted, keys);
    }

    #[test]
    fn resolution_tags() {
        assert_eq!("375".parse::<Resolution>().unwrap(), Resolution::Fine);
        assert_eq!("2250m".parse::<Resolution>().unwrap(), Resolution::Coarse);
        assert!("1000".parse::<Resolution>().is_err());
    }
}
