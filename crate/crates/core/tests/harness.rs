use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};
use clap::Parser;
use fuelmoist::harness::cli::{run, Cli};
use fuelmoist::harness::{enumerate_group_masks, run_ablation, run_cv, run_hpo, CvConfig, HpoConfig, RunManifest};
use fuelmoist::models::{GbtConfig, ModelConfig};
use fuelmoist::split::SplitStrategy;
use fuelmoist::synth::{generate, SynthConfig};
use fuelmoist::tabular::{
    fit_standardizer, select_groups, Column, ColumnSpec, Dataset, FeatureGroup, GroupMask, Schema, TARGET,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_gbt() -> ModelConfig {
    ModelConfig::Gbt(GbtConfig { n_estimators: 60, max_depth: 4, ..GbtConfig::default() })
}

fn nonlinear(seed: u64) -> Dataset {
    let ds = generate(&SynthConfig::nonlinear(seed)).unwrap().to_dataset().unwrap();
    select_groups(&ds, GroupMask::from_groups([FeatureGroup::Hrrr])).unwrap()
}

/// Three predictors on 12 sites with an exactly linear target.
fn linear_fixture(n: usize) -> Dataset {
    let schema = Schema::new(vec![
        ColumnSpec::new("u", FeatureGroup::Hrrr, "1"),
        ColumnSpec::new("v", FeatureGroup::Nwm, "1"),
        ColumnSpec::new("w", FeatureGroup::Lst, "1"),
    ])
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let y: Vec<f64> = (0..n).map(|i| 12.0 + 2.0 * cols[0][i] - 3.0 * cols[1][i] + 0.5 * cols[2][i]).collect();
    let t0 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
    Dataset::new(
        schema,
        (0..n).map(|i| Arc::from(format!("L{:02}", i % 12))).collect(),
        (0..n).map(|i| t0 + Duration::hours(i as i64)).collect(),
        cols.into_iter().map(Column::from_values).collect(),
        Column::from_values(y),
    )
    .unwrap()
}

#[test]
fn ten_folds_share_one_test_set() {
    let ds = nonlinear(1);
    let cv = run_cv(&ds, &CvConfig { model: ModelConfig::Linear, strategy: SplitStrategy::Random, folds: 10, seed: 3 }).unwrap();
    assert_eq!(cv.models.len(), 10);
    assert_eq!(cv.fold_results.len(), 10);
    let digest = cv.fold_results[0].test.rows_digest;
    for (f, r) in cv.folds.folds.iter().zip(&cv.fold_results) {
        assert_eq!(r.test.n, cv.folds.test.len());
        assert_eq!(r.test.rows_digest, digest);
        assert!(f.train.iter().chain(&f.val).all(|i| !cv.folds.test.contains(i)));
    }
}

#[test]
fn fold_standardizer_sees_only_fold_training_rows() {
    let ds = nonlinear(2);
    let cv = run_cv(&ds, &CvConfig { model: ModelConfig::Linear, strategy: SplitStrategy::Site, folds: 3, seed: 0 }).unwrap();
    let mut cols = ds.schema().names();
    cols.push(TARGET);
    for (fold, bundle) in cv.folds.folds.iter().zip(&cv.models) {
        let expected = fit_standardizer(&ds.take_rows(&fold.train), &cols).unwrap();
        assert_eq!(bundle.standardizer, expected);
    }
}

#[test]
fn exact_linear_target_is_recovered() {
    let ds = linear_fixture(600);
    for strategy in [SplitStrategy::Random, SplitStrategy::Site] {
        let cv = run_cv(&ds, &CvConfig { model: ModelConfig::Linear, strategy, folds: 4, seed: 9 }).unwrap();
        assert!(cv.rmse().0 < 1e-6, "{strategy}: {:?}", cv.rmse());
    }
}

#[test]
fn boosted_trees_beat_linear_on_curved_signal() {
    let ds = nonlinear(0);
    let cv = |model| run_cv(&ds, &CvConfig { model, strategy: SplitStrategy::Random, folds: 3, seed: 0 }).unwrap().rmse().0;
    let (lr, gbt) = (cv(ModelConfig::Linear), cv(small_gbt()));
    assert!(gbt < lr, "gbt {gbt} vs lr {lr}");
}

#[test]
fn cv_is_reproducible() {
    let ds = nonlinear(4);
    let cfg = CvConfig { model: small_gbt(), strategy: SplitStrategy::Site, folds: 2, seed: 11 };
    let (a, b) = (run_cv(&ds, &cfg).unwrap(), run_cv(&ds, &cfg).unwrap());
    assert_eq!(a.fold_results, b.fold_results);
    assert_eq!(a.test_predictions, b.test_predictions);
}

#[test]
fn hpo_budget_one_is_a_single_trial() {
    let ds = nonlinear(0);
    let cfg = HpoConfig { base: small_gbt(), strategy: SplitStrategy::Random, budget: 1, folds: 2, seed: 0, parallelism: 1 };
    let out = run_hpo(&ds, &cfg).unwrap();
    assert_eq!(out.history.len(), 1);
    assert_eq!(out.cv.models.len(), 2);
}

#[test]
fn hpo_never_ends_worse_than_defaults() {
    let ds = nonlinear(0);
    let cfg = HpoConfig { base: small_gbt(), strategy: SplitStrategy::Random, budget: 6, folds: 2, seed: 0, parallelism: 2 };
    let out = run_hpo(&ds, &cfg).unwrap();
    assert_eq!(out.history.len(), 6);
    let default = out.history.iter().find(|t| t.id == 0).and_then(|t| t.objective).unwrap();
    let best = out.best.objective.unwrap();
    assert!(best <= default);
    let mut running = f64::INFINITY;
    for t in &out.history {
        let next = running.min(t.objective.unwrap_or(f64::INFINITY));
        assert!(next <= running);
        running = next;
    }
    assert_eq!(running, best);
    assert!(run_hpo(&ds, &HpoConfig { base: ModelConfig::Linear, ..cfg }).is_err());
}

fn ablation_fixture() -> Dataset {
    let cfg = SynthConfig {
        n_sites: 6,
        n_years: 1,
        first_year: 2020,
        obs_stride_hours: 5,
        group_signal_weights: [0.0, 3.0, 0.0, 0.0, 0.0],
        site_effect_std: 0.0,
        seasonal_amplitude: 0.0,
        diurnal_amplitude: 0.0,
        ..SynthConfig::default()
    };
    generate(&cfg).unwrap().to_dataset().unwrap()
}

#[test]
fn ablation_ranks_the_signal_group() {
    let ds = ablation_fixture();
    let model = ModelConfig::Gbt(GbtConfig { n_estimators: 40, max_depth: 3, ..GbtConfig::default() });
    let a = run_ablation(&ds, &model, SplitStrategy::Random, 2, 0).unwrap();
    assert_eq!(a.rows.len(), 31);
    assert!(a.rows.iter().all(|r| r.missing.is_none()));
    assert!(a.rows[0].mask.contains(FeatureGroup::Hrrr));
    let singletons: Vec<_> = a.rows.iter().filter(|r| r.mask.len() == 1).collect();
    assert_eq!(singletons[0].mask, GroupMask::from_groups([FeatureGroup::Hrrr]));
    let worst = a.rows.last().unwrap();
    assert!(!worst.mask.contains(FeatureGroup::Hrrr));

    let only = |g| a.get(GroupMask::from_groups([g])).unwrap().n_rows;
    assert!(only(FeatureGroup::ViirsRefl) < only(FeatureGroup::Hrrr));
    assert_eq!(only(FeatureGroup::ViirsRefl), only(FeatureGroup::Lst));

    let mut buf = (Vec::new(), Vec::new());
    a.write_csv(&mut buf.0).unwrap();
    run_ablation(&ds, &model, SplitStrategy::Random, 2, 0).unwrap().write_csv(&mut buf.1).unwrap();
    assert_eq!(buf.0, buf.1);
}

#[test]
fn all_thirty_one_masks_are_distinct() {
    let masks = enumerate_group_masks();
    assert_eq!(masks.len(), 31);
    let mut keys: Vec<String> = masks.iter().map(|m| m.key()).collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys.len(), 31);
}

#[test]
fn cli_rejects_bad_flags() {
    assert!(Cli::try_parse_from(["fuelmoist", "cv", "--model", "svm"]).is_err());
    assert!(Cli::try_parse_from(["fuelmoist", "cv", "--resolution", "1000"]).is_err());
    assert!(Cli::try_parse_from(["fuelmoist", "frobnicate"]).is_err());
    let cli = Cli::try_parse_from(["fuelmoist", "cv", "--groups", "00000"]).unwrap();
    assert!(cli.opts.run_config().is_err());
    let cli = Cli::try_parse_from(["fuelmoist", "cv", "--clim-era-end", "2018-13-01"]).unwrap();
    assert!(cli.opts.run_config().is_err());
}

#[test]
fn cli_runs_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let go = |args: &[&str]| {
        let mut full = vec!["fuelmoist"];
        full.extend_from_slice(args);
        full.extend_from_slice(&["--out", d, "--sites", "4", "--years", "2", "--folds", "2", "--seed", "1"]);
        let path = run(&Cli::try_parse_from(full).unwrap()).unwrap();
        RunManifest::parse(&std::fs::read_to_string(path).unwrap())
    };
    go(&["synth"]);
    let m = go(&["ingest", "--clim-era-end", "2013-01-01"]);
    assert!(m.get("ingest", "clim_observations").unwrap().parse::<usize>().unwrap() > 0);
    go(&["clim"]);
    go(&["split", "--split", "site"]);
    let m = go(&["train", "--model", "lr"]);
    assert!(m.get("artifacts", "model.json").unwrap().starts_with("sha256:"));
    let m = go(&["cv", "--model", "lr", "--groups", "11011"]);
    assert_eq!(m.get("config", "groups"), Some("11011"));
    go(&["explain", "--model", "lr"]);
    go(&["eval", "--model", "lr"]);
    let m = go(&["report"]);
    assert_eq!(m.get("run", "command"), Some("report"));
    for f in ["dataset.csv", "clim_doy.csv", "folds.csv", "cv_summary.csv", "importance.csv", "eval_metrics.csv", "report.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let report = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(report.starts_with("source,key,value"));

    let missing = tempfile::tempdir().unwrap();
    let cli = Cli::try_parse_from(["fuelmoist", "cv", "--out", missing.path().to_str().unwrap()]).unwrap();
    assert!(run(&cli).is_err());
}
