use fuelmoist::climatology::{build_climatology, ClimatologyKind};
use fuelmoist::harness::{ingest_dir, Resolution};
use fuelmoist::metrics::{pearson, rmse};
use fuelmoist::synth::{generate, group_function, SynthConfig};
use fuelmoist::tabular::{Dataset, FeatureGroup};
use proptest::prelude::*;

/// Largest |Pearson r| between FMC and any predictor of `group`, and the
/// smallest number of complete rows it was computed on.
fn max_abs_corr(ds: &Dataset, group: FeatureGroup) -> (f64, usize) {
    let y = ds.fmc();
    let mut worst: f64 = 0.0;
    let mut n_min = usize::MAX;
    for (j, spec) in ds.schema().columns().iter().enumerate() {
        if spec.group != group {
            continue;
        }
        let col = ds.column(j);
        let rows: Vec<usize> = (0..ds.n_rows()).filter(|&r| col.is_present(r) && y.is_present(r)).collect();
        let a: Vec<f64> = rows.iter().map(|&r| col.get(r).unwrap()).collect();
        let b: Vec<f64> = rows.iter().map(|&r| y.get(r).unwrap()).collect();
        worst = worst.max(pearson(&a, &b).unwrap().abs());
        n_min = n_min.min(rows.len());
    }
    (worst, n_min)
}

#[test]
fn zero_weight_groups_are_uncorrelated_with_fmc() {
    // a per-site random offset would alias with the per-site static columns
    let base = SynthConfig { n_years: 1, first_year: 2020, site_effect_std: 0.0, ..SynthConfig::default() };
    for g in FeatureGroup::ALL {
        let mut w = [0.0, 2.0, 0.0, 1.5, 0.0];
        if w[g.index()] != 0.0 {
            w = [0.5, 0.0, 0.7, 0.0, 0.5];
        }
        let ds = generate(&SynthConfig { group_signal_weights: w, ..base.clone() }).unwrap().to_dataset().unwrap();
        let (r, n) = max_abs_corr(&ds, g);
        assert!(n >= 10_000, "{g}: only {n} rows");
        assert!(r < 0.05, "{g}: |r| = {r}");
    }
}

#[test]
fn weighted_group_is_correlated_with_fmc() {
    let cfg = SynthConfig { n_years: 1, first_year: 2020, group_signal_weights: [0.0, 0.0, 0.0, 3.0, 0.0], ..SynthConfig::default() };
    let ds = generate(&cfg).unwrap().to_dataset().unwrap();
    assert!(max_abs_corr(&ds, FeatureGroup::ViirsRefl).0 > 0.3);
}

#[test]
fn pure_seasonal_signal_is_recovered_by_climatology() {
    let cfg = SynthConfig {
        n_sites: 3,
        n_years: 6,
        grid_years: 0,
        group_signal_weights: [0.0; 5],
        noise_std: 0.0,
        diurnal_amplitude: 0.0,
        ..SynthConfig::default()
    };
    let data = generate(&cfg).unwrap();
    let clim = build_climatology(&data.observations, ClimatologyKind::Doy).unwrap();
    let (mut y, mut f) = (Vec::new(), Vec::new());
    for o in &data.observations {
        if let Some(p) = clim.predict(&o.site_id, o.timestamp) {
            y.push(o.fmc);
            f.push(p);
        }
    }
    assert!(y.len() > data.observations.len() / 2);
    // the 31-day pooling window flattens a ±5 % sinusoid by about 1.2 %
    let e = rmse(&y, &f).unwrap();
    assert!(e < 0.06, "rmse {e}");
}

#[test]
fn written_fixture_ingests_to_the_same_table() {
    let cfg = SynthConfig { n_sites: 5, n_years: 2, first_year: 2019, obs_stride_hours: 3, ..SynthConfig::default() };
    let data = generate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write_dir(dir.path()).unwrap();
    let ing = ingest_dir(dir.path(), Resolution::Fine, None).unwrap();
    assert_eq!(ing.dataset, data.to_dataset().unwrap());
    use fuelmoist::ingest::ChangeKind;
    let moved = ing.changelog.iter().filter(|c| c.kind == ChangeKind::LocationChange).count();
    let rejected = ing.changelog.iter().filter(|c| c.kind == ChangeKind::Rejected).count();
    assert_eq!((moved, rejected), (2, 1));
    assert_eq!(ing.n_qc_failed, 0);

    let era = cfg.grid_start();
    let split = ingest_dir(dir.path(), Resolution::Fine, Some(era)).unwrap();
    assert!(split.dataset.timestamps().iter().all(|t| *t >= era));
    assert!(split.clim_observations.iter().all(|o| fuelmoist::ingest::assign_nearest_hour(o.timestamp) < era));
    assert_eq!(split.dataset.n_rows() + split.clim_observations.len(), data.observations.len());

    let coarse = ingest_dir(dir.path(), Resolution::Coarse, Some(era)).unwrap();
    assert_eq!(coarse.dataset.n_rows(), split.dataset.n_rows());
}

#[test]
fn truth_rows_match_the_table() {
    let cfg = SynthConfig { n_sites: 4, n_years: 1, first_year: 2021, ..SynthConfig::default() };
    let data = generate(&cfg).unwrap();
    let ds = data.to_dataset().unwrap();
    assert_eq!(ds.n_rows(), data.truth.rows.len());
    for r in (0..ds.n_rows()).step_by(97) {
        let t = data.truth.lookup(ds.site_id(r), ds.timestamp(r)).unwrap();
        assert_eq!(ds.fmc().get(r), Some(t.fmc));
        for g in FeatureGroup::ALL {
            assert_eq!(t.contributions[g.index()], cfg.weight(g) * group_function(g, &t.latents));
        }
    }
    assert_eq!(data.truth.optimal_rmse(), cfg.noise_std);
}

#[test]
fn regeneration_is_bit_identical() {
    let cfg = SynthConfig { n_sites: 3, n_years: 1, first_year: 2020, seed: 42, ..SynthConfig::default() };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate(&cfg).unwrap().write_dir(a.path()).unwrap();
    generate(&cfg).unwrap().write_dir(b.path()).unwrap();
    for name in ["sites.csv", "observations.csv", "truth.json", "fields/t2m.csv", "fields/rfl_m1.csv"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let other = generate(&SynthConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(other.observations, generate(&SynthConfig { n_sites: 3, n_years: 1, first_year: 2020, seed: 42, ..SynthConfig::default() }).unwrap().observations);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fmc_in_range_and_passes_qc(seed in 0u64..1000, w in prop::array::uniform5(-40.0f64..40.0), noise in 0.0f64..30.0) {
        let cfg = SynthConfig {
            n_sites: 2,
            n_years: 1,
            grid_years: 0,
            first_year: 2021,
            seed,
            group_signal_weights: w,
            noise_std: noise,
            ..SynthConfig::default()
        };
        let data = generate(&cfg).unwrap();
        prop_assert!(data.observations.iter().all(|o| o.qc_pass && (0.0..=400.0).contains(&o.fmc)));
    }
}
