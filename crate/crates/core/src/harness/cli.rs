//! Command-line surface. Every command reads its inputs from `--data`,
//! writes CSV artifacts to `--out` and finishes with
//! `manifest_<command>.txt` there.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand};

use super::*;
use crate::hpo::write_history;
use crate::ingest::{write_changelog, write_observations};
use crate::metrics::skill_on_unmasked;
use crate::split::Label;
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "fuelmoist", version, about = "Dead fuel moisture estimation pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a synthetic fixture directory
    Synth,
    /// Pair observations with predictor fields into a training table
    Ingest,
    /// Build DOY and DOY-HR climatology tables
    Clim,
    /// Write the train/val/test assignment and fold manifest
    Split,
    /// Fit one model on the training split
    Train,
    /// k-fold cross-validation with skill tables
    Cv,
    /// TPE hyperparameter search followed by cross-validation of the winner
    Hpo,
    /// Cross-validate every one of the 31 group masks
    Ablate,
    /// Feature importance and Shapley values for a trained model
    Explain,
    /// Score a trained model and the climatologies on every split label
    Eval,
    /// Collect the headline numbers of a run directory
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Ingest => "ingest",
            Command::Clim => "clim",
            Command::Split => "split",
            Command::Train => "train",
            Command::Cv => "cv",
            Command::Hpo => "hpo",
            Command::Ablate => "ablate",
            Command::Explain => "explain",
            Command::Eval => "eval",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Input directory
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value = "gbt", value_parser = ["lr", "gbt", "mlp"])]
    pub model: String,
    #[arg(long, global = true, default_value = "random", value_parser = ["random", "site"])]
    pub split: String,
    /// Five-bit group mask in (Static, HRRR, NWM, ViirsRefl, LST) order
    #[arg(long, global = true, default_value = "11111")]
    pub groups: String,
    #[arg(long, global = true, default_value = "375", value_parser = ["375", "2250"])]
    pub resolution: String,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 10)]
    pub folds: usize,
    /// Number of search trials
    #[arg(long, global = true, default_value_t = 20)]
    pub budget: usize,
    /// First date (YYYY-MM-DD, UTC) of the modeling era; earlier observations
    /// only feed the climatology
    #[arg(long, global = true)]
    pub clim_era_end: Option<String>,
    /// Synthetic fixture: number of sites
    #[arg(long, global = true, default_value_t = 20)]
    pub sites: usize,
    /// Synthetic fixture: number of years
    #[arg(long, global = true, default_value_t = 7)]
    pub years: u32,
    /// Synthetic fixture: trailing years with predictor rasters
    #[arg(long, global = true, default_value_t = 1)]
    pub grid_years: u32,
}

/// Validated run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub out: PathBuf,
    pub model: ModelKind,
    pub split: SplitStrategy,
    pub groups: GroupMask,
    pub resolution: Resolution,
    pub seed: u64,
    pub folds: usize,
    pub budget: usize,
    pub clim_era_end: Option<DateTime<Utc>>,
}

pub fn parse_date(s: &str) -> Result<DateTime<Utc>> {
    let d = NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| Error::Parse(format!("date `{s}`; expected YYYY-MM-DD")))?;
    Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
}

impl Options {
    pub fn run_config(&self) -> Result<RunConfig> {
        let groups: GroupMask = self.groups.parse()?;
        if groups.is_empty() {
            return Err(Error::InvalidArgument("group mask must select at least one group".into()));
        }
        if self.folds == 0 {
            return Err(Error::InvalidArgument("--folds must be positive".into()));
        }
        Ok(RunConfig {
            data: self.data.clone().unwrap_or_else(|| self.out.clone()),
            out: self.out.clone(),
            model: self.model.parse()?,
            split: self.split.parse()?,
            groups,
            resolution: self.resolution.parse()?,
            seed: self.seed,
            folds: self.folds,
            budget: self.budget,
            clim_era_end: self.clim_era_end.as_deref().map(parse_date).transpose()?,
        })
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    manifest: RunManifest,
}

impl Outputs<'_> {
    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        drop(w);
        self.manifest.artifact(&path)
    }

    fn finish(self, command: Command) -> Result<PathBuf> {
        let path = self.dir.join(format!("manifest_{}.txt", command.name()));
        self.manifest.write(BufWriter::new(File::create(&path)?))?;
        Ok(path)
    }
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::InvalidArgument(format!("required input `{}` does not exist", path.display())))
    }
}

/// The ingested table restricted to the selected groups.
pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let path = require(cfg.data.join("dataset.csv"))?;
    let ds = Dataset::read_csv(BufReader::new(File::open(path)?), &Schema::default_fmc())?;
    select_groups(&ds, cfg.groups)
}

/// DOY and DOY-HR tables: read from `clim_doy.csv`/`clim_doyhr.csv` when
/// present, otherwise built from `clim_observations.csv`.
pub fn load_baselines(dir: &Path) -> Result<Option<[ClimatologyTable; 2]>> {
    let (doy, hr) = (dir.join("clim_doy.csv"), dir.join("clim_doyhr.csv"));
    if doy.exists() && hr.exists() {
        let read = |p: &Path| -> Result<ClimatologyTable> { ClimatologyTable::read_csv(BufReader::new(File::open(p)?)) };
        return Ok(Some([read(&doy)?, read(&hr)?]));
    }
    let obs = dir.join("clim_observations.csv");
    if obs.exists() {
        let obs = read_observations(BufReader::new(File::open(obs)?))?;
        return Ok(Some(build_baselines(&obs)?));
    }
    Ok(None)
}

/// Default hyperparameters for the model kind, replaced by a search winner
/// stored as `best_config.json` in the data directory when its kind matches.
pub fn resolve_model_config(cfg: &RunConfig) -> Result<(ModelConfig, &'static str)> {
    let path = cfg.data.join("best_config.json");
    if path.exists() {
        let c: ModelConfig = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if c.kind() == cfg.model {
            return Ok((c, "best_config.json"));
        }
    }
    Ok((ModelConfig::default_for(cfg.model), "defaults"))
}

fn record_config(m: &mut RunManifest, cfg: &RunConfig) {
    m.set("config", "data", cfg.data.display());
    m.set("config", "out", cfg.out.display());
    m.set("config", "model", cfg.model);
    m.set("config", "split", cfg.split);
    m.set("config", "groups", cfg.groups);
    m.set("config", "resolution", cfg.resolution);
    m.set("config", "seed", cfg.seed);
    m.set("config", "folds", cfg.folds);
    m.set("config", "budget", cfg.budget);
    m.set("config", "clim_era_end", cfg.clim_era_end.map(crate::tabular::format_timestamp).unwrap_or_else(|| "none".into()));
}

/// Fits one model on the split's train rows (validation rows drive MLP
/// early stopping).
fn train_on_split(ds: &Dataset, cfg: &RunConfig, model: &ModelConfig) -> Result<(SplitAssignment, ModelBundle)> {
    let assignment = split(ds, cfg.split, Fractions::default(), cfg.seed)?;
    let train = ds.take_rows(&assignment.rows(Label::Train));
    let val = ds.take_rows(&assignment.rows(Label::Val));
    let bundle = ModelBundle::fit(&train, &val, model, cfg.seed)?;
    Ok((assignment, bundle))
}

/// A saved `model.json` from the data directory, or a freshly trained one.
fn model_for(ds: &Dataset, cfg: &RunConfig, m: &mut RunManifest) -> Result<(SplitAssignment, ModelBundle)> {
    let path = cfg.data.join("model.json");
    if path.exists() {
        let bundle = ModelBundle::read_json(BufReader::new(File::open(&path)?))?;
        if bundle.model.kind() == cfg.model && bundle.schema_hash == crate::tabular::schema_hash(&ds.schema().names()) {
            m.set("model", "source", "model.json");
            return Ok((split(ds, cfg.split, Fractions::default(), cfg.seed)?, bundle));
        }
    }
    let (model, source) = resolve_model_config(cfg)?;
    m.set("model", "source", format!("trained ({source})"));
    m.set("model", "config", serde_json::to_string(&model)?);
    train_on_split(ds, cfg, &model)
}

/// Executes one command; returns the manifest path.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    let cfg = cli.opts.run_config()?;
    fs::create_dir_all(&cfg.out)?;
    let mut out = Outputs { dir: &cfg.out, manifest: RunManifest::new(cli.command.name()) };
    record_config(&mut out.manifest, &cfg);
    match cli.command {
        Command::Synth => {
            let sc = SynthConfig {
                n_sites: cli.opts.sites,
                n_years: cli.opts.years,
                grid_years: cli.opts.grid_years,
                seed: cfg.seed,
                ..SynthConfig::default()
            };
            let data = generate(&sc)?;
            data.write_dir(&cfg.out)?;
            out.manifest.set("synth", "config", serde_json::to_string(&sc)?);
            out.manifest.set("synth", "observations", data.observations.len());
            out.manifest.set("synth", "fields", data.fields.len());
            for name in ["sites.csv", "observations.csv", "truth.json"] {
                out.manifest.artifact(&cfg.out.join(name))?;
            }
        }
        Command::Ingest => {
            let ing = ingest_dir(&cfg.data, cfg.resolution, cfg.clim_era_end)?;
            out.manifest.set("ingest", "observations", ing.n_observations);
            out.manifest.set("ingest", "qc_failed", ing.n_qc_failed);
            out.manifest.set("ingest", "rows", ing.dataset.n_rows());
            out.manifest.set("ingest", "sites", ing.dataset.distinct_sites().len());
            out.manifest.set("ingest", "clim_observations", ing.clim_observations.len());
            out.write("dataset.csv", |w| ing.dataset.write_csv(w))?;
            out.write("clim_observations.csv", |w| write_observations(w, &ing.clim_observations))?;
            out.write("changelog.csv", |w| write_changelog(w, &ing.changelog))?;
            out.write("schema.csv", |w| ing.dataset.schema().write_manifest(w))?;
        }
        Command::Clim => {
            let obs = read_observations(BufReader::new(File::open(require(cfg.data.join("clim_observations.csv"))?)?))?;
            let [doy, hr] = build_baselines(&obs)?;
            out.manifest.set("clim", "observations", obs.len());
            out.write("clim_doy.csv", |w| doy.write_csv(w))?;
            out.write("clim_doyhr.csv", |w| hr.write_csv(w))?;
        }
        Command::Split => {
            let ds = load_dataset(&cfg)?;
            let assignment = split(&ds, cfg.split, Fractions::default(), cfg.seed)?;
            let folds = make_folds(&ds, &assignment, cfg.folds, cfg.seed)?;
            for l in Label::ALL {
                out.manifest.set("split", l.name(), assignment.count(l));
            }
            out.write("split.csv", |w| {
                let mut wr = csv::Writer::from_writer(w);
                wr.write_record(["row_index", "site_id", "label"])?;
                for (r, l) in assignment.labels.iter().enumerate() {
                    wr.write_record([r.to_string(), ds.site_id(r).to_string(), l.name().to_string()])?;
                }
                wr.flush()?;
                Ok(())
            })?;
            out.write("folds.csv", |w| folds.write_csv(w))?;
        }
        Command::Train => {
            let ds = load_dataset(&cfg)?;
            let (model, source) = resolve_model_config(&cfg)?;
            out.manifest.set("model", "source", source);
            out.manifest.set("model", "config", serde_json::to_string(&model)?);
            let (assignment, bundle) = train_on_split(&ds, &cfg, &model)?;
            out.write("model.json", |w| bundle.write_json(w))?;
            let pred = bundle.predict(&ds)?;
            out.write("metrics.csv", |w| write_label_metrics(w, &ds, &assignment, &pred, None))?;
        }
        Command::Cv => {
            let ds = load_dataset(&cfg)?;
            let (model, source) = resolve_model_config(&cfg)?;
            out.manifest.set("model", "source", source);
            out.manifest.set("model", "config", serde_json::to_string(&model)?);
            let cv = run_cv(&ds, &CvConfig { model, strategy: cfg.split, folds: cfg.folds, seed: cfg.seed })?;
            write_cv(&mut out, &ds, &cv)?;
            match load_baselines(&cfg.data)? {
                Some(clims) => {
                    let [site, month] = cv_skill_tables(&ds, &cv, &[&clims[0], &clims[1]])?;
                    out.write("skill_site.csv", |w| site.write_csv(w))?;
                    out.write("skill_month.csv", |w| month.write_csv(w))?;
                }
                None => out.manifest.set("cv", "skill", "skipped: no climatology inputs"),
            }
        }
        Command::Hpo => {
            let ds = load_dataset(&cfg)?;
            let base = ModelConfig::default_for(cfg.model);
            let hc = HpoConfig { base, strategy: cfg.split, budget: cfg.budget, folds: cfg.folds, seed: cfg.seed, parallelism: 1 };
            let res = run_hpo(&ds, &hc)?;
            out.manifest.set("hpo", "best_trial", res.best.id);
            out.manifest.set("hpo", "best_val_rmse", res.best.objective.unwrap_or(f64::NAN));
            let space = super::space_for(cfg.model)?;
            out.write("hpo_history.csv", |w| write_history(w, &space, &res.history))?;
            out.write("best_config.json", |w| Ok(serde_json::to_writer_pretty(w, &res.best_config)?))?;
            write_cv(&mut out, &ds, &res.cv)?;
        }
        Command::Ablate => {
            let ds = require(cfg.data.join("dataset.csv"))
                .and_then(|p| Dataset::read_csv(BufReader::new(File::open(p)?), &Schema::default_fmc()))?;
            let (model, source) = resolve_model_config(&cfg)?;
            out.manifest.set("model", "source", source);
            out.manifest.set("model", "config", serde_json::to_string(&model)?);
            let res = run_ablation(&ds, &model, cfg.split, cfg.folds, cfg.seed)?;
            out.manifest.set("ablate", "masks", res.rows.len());
            out.manifest.set("ablate", "missing", res.rows.iter().filter(|r| r.missing.is_some()).count());
            out.write("ablation.csv", |w| res.write_csv(w))?;
        }
        Command::Explain => {
            let ds = load_dataset(&cfg)?;
            let (assignment, bundle) = model_for(&ds, &cfg, &mut out.manifest)?;
            let target = ds.take_rows(&assignment.rows(Label::Test));
            let background = ds.take_rows(&assignment.rows(Label::Train));
            let ec = ExplainConfig { seed: cfg.seed, ..ExplainConfig::default() };
            out.manifest.set("explain", "config", serde_json::to_string(&ec)?);
            let ex = explain_bundle(&bundle, &target, &background, &ec)?;
            for r in &ex.reports {
                if let Some(w) = &r.warning {
                    out.manifest.set("explain", &format!("warning_{}", r.method), w);
                }
            }
            out.write("importance.csv", |w| crate::explain::write_importance_csv(w, &ex.reports))?;
            out.write("stacked_importance.csv", |w| ex.stacked.write_csv(w))?;
            out.write("shap_values.csv", |w| ex.write_shap_csv(w))?;
            out.write("group_shap.csv", |w| {
                let mut wr = csv::Writer::from_writer(w);
                wr.write_record(["group", "mean_abs_shap"])?;
                for (g, v) in ex.group_shap(ds.schema()) {
                    wr.write_record([g.name(), &v.to_string()])?;
                }
                wr.flush()?;
                Ok(())
            })?;
        }
        Command::Eval => {
            let ds = load_dataset(&cfg)?;
            let (assignment, bundle) = model_for(&ds, &cfg, &mut out.manifest)?;
            let pred = bundle.predict(&ds)?;
            let clims = load_baselines(&cfg.data)?;
            let refs: Vec<&ClimatologyTable> = clims.iter().flatten().collect();
            out.write("eval_metrics.csv", |w| write_label_metrics(w, &ds, &assignment, &pred, Some(&refs)))?;
            let test_rows = assignment.rows(Label::Test);
            let test = ds.take_rows(&test_rows);
            let tp: Vec<f64> = test_rows.iter().map(|&r| pred[r]).collect();
            for (key, name) in [(GroupKey::Site, "eval_site.csv"), (GroupKey::Month, "eval_month.csv"), (GroupKey::Hour, "eval_hour.csv")] {
                let g = grouped_metrics(&test, &tp, &refs, key, None)?;
                out.write(name, |w| g.write_csv(w))?;
            }
        }
        Command::Report => {
            let rows = collect_report(&cfg.data)?;
            out.manifest.set("report", "entries", rows.len());
            out.write("report.csv", |w| {
                let mut wr = csv::Writer::from_writer(w);
                wr.write_record(["source", "key", "value"])?;
                for r in &rows {
                    wr.write_record(r)?;
                }
                wr.flush()?;
                Ok(())
            })?;
        }
    }
    out.finish(cli.command)
}

fn write_cv(out: &mut Outputs<'_>, ds: &Dataset, cv: &CvResult) -> Result<()> {
    let (m, s) = cv.rmse();
    out.manifest.set("cv", "rmse", format!("{m} ± {s}"));
    out.manifest.set("cv", "test_rows", cv.folds.test.len());
    out.write("cv_folds.csv", |w| cv.write_folds_csv(w))?;
    out.write("cv_summary.csv", |w| cv.write_summary_csv(w))?;
    out.write("cv_predictions.csv", |w| cv.write_predictions_csv(w, ds))
}

/// `label,metric,value,n` for train/val/test, with skill rows against each
/// baseline when given.
fn write_label_metrics<W: Write>(
    w: W,
    ds: &Dataset,
    assignment: &SplitAssignment,
    pred: &[f64],
    clims: Option<&[&ClimatologyTable]>,
) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["label", "metric", "value", "n"])?;
    let y = ds.target_vector(None)?;
    for l in Label::ALL {
        let rows = assignment.rows(l);
        if rows.is_empty() {
            continue;
        }
        let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
        let ps: Vec<f64> = rows.iter().map(|&r| pred[r]).collect();
        let m = MetricReport::compute(&ys, &ps)?;
        let n = m.n.to_string();
        wr.write_record([l.name(), "rmse", &m.rmse.to_string(), &n])?;
        wr.write_record([l.name(), "r2", &m.r2.map(|v| v.to_string()).unwrap_or_default(), &n])?;
        for c in clims.unwrap_or(&[]) {
            let cp: Vec<Option<f64>> = rows.iter().map(|&r| c.predict(ds.site_id(r), ds.timestamp(r))).collect();
            if let Some((_, cm, s)) = skill_on_unmasked(&ys, &ps, &cp, c.kind())? {
                let k = c.kind().label();
                let n = s.n.to_string();
                wr.write_record([l.name(), &format!("rmse_{k}"), &cm.rmse.to_string(), &n])?;
                wr.write_record([l.name(), &format!("skill_rmse_{k}"), &s.skill_rmse.to_string(), &n])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

/// Headline numbers from whatever artifacts exist in `dir`.
pub fn collect_report(dir: &Path) -> Result<Vec<[String; 3]>> {
    let mut rows = Vec::new();
    let mut read = |name: &str, f: &mut dyn FnMut(&csv::StringRecord, &mut Vec<[String; 3]>)| -> Result<bool> {
        let p = dir.join(name);
        if !p.exists() {
            return Ok(false);
        }
        let mut rd = csv::Reader::from_reader(BufReader::new(File::open(p)?));
        for rec in rd.records() {
            f(&rec?, &mut rows);
        }
        Ok(true)
    };
    let mut found = false;
    found |= read("cv_summary.csv", &mut |r, out| {
        out.push(["cv".into(), format!("{}_mean", &r[0]), r[1].into()]);
        out.push(["cv".into(), format!("{}_std", &r[0]), r[2].into()]);
    })?;
    found |= read("skill_site.csv", &mut |r, out| {
        if r[1].starts_with("skill_rmse") {
            out.push(["skill_site".into(), format!("{}:{}", &r[0], &r[1]), r[2].into()]);
        }
    })?;
    let mut best_mask = true;
    found |= read("ablation.csv", &mut |r, out| {
        if best_mask {
            out.push(["ablation".into(), "best_mask".into(), r[0].into()]);
            out.push(["ablation".into(), "best_r2_mean".into(), r[6].into()]);
            best_mask = false;
        }
    })?;
    found |= read("stacked_importance.csv", &mut |r, out| {
        if &r[1] == "sum" && r[3].parse::<usize>().is_ok_and(|k| k <= 10) {
            out.push(["importance".into(), format!("rank_{:02}", r[3].parse::<usize>().unwrap_or(0)), r[0].into()]);
        }
    })?;
    found |= read("group_shap.csv", &mut |r, out| out.push(["group_shap".into(), r[0].into(), r[1].into()]))?;
    found |= read("eval_metrics.csv", &mut |r, out| out.push(["eval".into(), format!("{}:{}", &r[0], &r[1]), r[2].into()]))?;
    if !found {
        return Err(Error::InvalidArgument(format!("no run artifacts found in `{}`", dir.display())));
    }
    // deterministic order regardless of which files exist
    rows.sort_by(|a, b| (a[0].as_str(), a[1].as_str()).cmp(&(b[0].as_str(), b[1].as_str())));
    Ok(rows)
}
