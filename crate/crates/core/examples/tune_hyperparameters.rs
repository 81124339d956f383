// Usage: cargo run --release --example tune_hyperparameters [budget]
//
// Searches the boosted-tree space, then cross-validates the winner.

use fuelmoist::harness::{run_hpo, HpoConfig};
use fuelmoist::hpo::best_so_far;
use fuelmoist::models::ModelConfig;
use fuelmoist::split::SplitStrategy;
use fuelmoist::synth::{generate, SynthConfig};
use fuelmoist::tabular::{select_groups, FeatureGroup, GroupMask};

fn main() -> fuelmoist::Result<()> {
    let budget = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let raw = generate(&SynthConfig::nonlinear(1))?.to_dataset()?;
    let ds = select_groups(&raw, GroupMask::from_groups([FeatureGroup::Hrrr]))?;
    let cfg = HpoConfig {
        base: ModelConfig::default_for(fuelmoist::models::ModelKind::Gbt),
        strategy: SplitStrategy::Random,
        budget,
        folds: 3,
        seed: 0,
        parallelism: 2,
    };
    let out = run_hpo(&ds, &cfg)?;
    for (t, b) in out.history.iter().zip(best_so_far(&out.history)) {
        println!("trial {:>3}: {:>8.4}  best {b:.4}", t.id, t.objective.unwrap_or(f64::NAN));
    }
    println!("winner: {}", serde_json::to_string(&out.best_config)?);
    println!("cv rmse of winner: {:.4}", out.cv.rmse().0);
    Ok(())
}
