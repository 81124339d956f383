// Usage: cargo run --release --example cross_validate
//
// Ten-fold site cross-validation of boosted trees, scored against both
// climatology baselines per month.

use fuelmoist::harness::{build_baselines, cv_skill_tables, run_cv, CvConfig};
use fuelmoist::models::{GbtConfig, ModelConfig};
use fuelmoist::split::SplitStrategy;
use fuelmoist::synth::{generate, SynthConfig};
use fuelmoist::tabular::{select_groups, GroupMask};

fn main() -> fuelmoist::Result<()> {
    let cfg = SynthConfig {
        n_sites: 20,
        n_years: 6,
        first_year: 2013,
        group_signal_weights: [0.5, 3.0, 1.0, 2.0, 1.0],
        seasonal_amplitude: 2.0,
        diurnal_amplitude: 1.0,
        site_effect_std: 0.5,
        ..SynthConfig::default()
    };
    let data = generate(&cfg)?;
    let ds = select_groups(&data.to_dataset()?, GroupMask::FULL)?;
    let baselines = build_baselines(&data.observations)?;
    let model = ModelConfig::Gbt(GbtConfig { n_estimators: 80, ..GbtConfig::default() });
    let cv = run_cv(&ds, &CvConfig { model, strategy: SplitStrategy::Site, folds: 10, seed: 0 })?;
    let (rmse, r2) = (cv.rmse(), cv.r2());
    println!("{} rows, {} test rows", ds.n_rows(), cv.folds.test.len());
    println!("rmse {:.3} +/- {:.3}, r2 {:.3} +/- {:.3}", rmse.0, rmse.1, r2.0, r2.1);
    let [_, by_month] = cv_skill_tables(&ds, &cv, &[&baselines[0], &baselines[1]])?;
    println!("month   n   rmse  skill(DOY)  skill(DOY-HR)");
    for g in &by_month.groups {
        let sk: Vec<String> = g.skills.iter().map(|s| format!("{:>10.3}", s.skill_rmse)).collect();
        println!("{:>5} {:>4} {:>6.3} {}", g.group, g.metrics.n, g.metrics.rmse, sk.join("  "));
    }
    Ok(())
}
