// Usage: cargo run --release --example group_ablation
//
// Cross-validates every non-empty combination of predictor groups.

use fuelmoist::harness::run_ablation;
use fuelmoist::models::{GbtConfig, ModelConfig};
use fuelmoist::split::SplitStrategy;
use fuelmoist::synth::{generate, SynthConfig};

fn main() -> fuelmoist::Result<()> {
    let cfg = SynthConfig {
        n_sites: 8,
        n_years: 1,
        first_year: 2020,
        obs_stride_hours: 5,
        group_signal_weights: [0.0, 2.0, 0.0, 3.0, 0.0],
        ..SynthConfig::default()
    };
    let ds = generate(&cfg)?.to_dataset()?;
    let model = ModelConfig::Gbt(GbtConfig { n_estimators: 60, max_depth: 4, ..GbtConfig::default() });
    let table = run_ablation(&ds, &model, SplitStrategy::Random, 3, 0)?;
    table.write_csv(std::io::stdout().lock())?;
    Ok(())
}
