// Usage: cargo run --release --example explain_model
//
// Permutation, gain and SHAP importance of a boosted-tree model, summed
// per predictor group.

use fuelmoist::harness::{explain_bundle, ExplainConfig};
use fuelmoist::models::{GbtConfig, ModelBundle, ModelConfig};
use fuelmoist::split::{split, Fractions, Label, SplitStrategy};
use fuelmoist::synth::{generate, SynthConfig};
use fuelmoist::tabular::{select_groups, GroupMask};

fn main() -> fuelmoist::Result<()> {
    let cfg = SynthConfig {
        n_sites: 10,
        n_years: 1,
        first_year: 2020,
        group_signal_weights: [0.5, 3.0, 0.0, 1.5, 0.0],
        site_effect_std: 0.0,
        ..SynthConfig::default()
    };
    let ds = select_groups(&generate(&cfg)?.to_dataset()?, GroupMask::FULL)?;
    let a = split(&ds, SplitStrategy::Random, Fractions::default(), 0)?;
    let (train, val, test) = (ds.take_rows(&a.rows(Label::Train)), ds.take_rows(&a.rows(Label::Val)), ds.take_rows(&a.rows(Label::Test)));
    let bundle = ModelBundle::fit(&train, &val, &ModelConfig::Gbt(GbtConfig { n_estimators: 80, ..GbtConfig::default() }), 0)?;
    let ex = explain_bundle(&bundle, &test, &train, &ExplainConfig { n_rows: 100, ..ExplainConfig::default() })?;

    println!("top features by stacked rank:");
    for (name, score) in ex.stacked.ordered().into_iter().take(8) {
        println!("  {name:<14} {score:.3}");
    }
    println!("mean |SHAP| per group:");
    for (g, v) in ex.group_shap(ds.schema()) {
        println!("  {:<10} {v:.3}", g.name());
    }
    Ok(())
}
