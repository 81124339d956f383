// Usage: cargo run --release --example train_models
//
// Fits the three regressors on a curved signal and scores them on held-out
// rows.

use fuelmoist::metrics::MetricReport;
use fuelmoist::models::{ModelBundle, ModelConfig, ModelKind};
use fuelmoist::split::{split, Fractions, Label, SplitStrategy};
use fuelmoist::synth::{generate, SynthConfig};
use fuelmoist::tabular::{select_groups, FeatureGroup, GroupMask};

fn main() -> fuelmoist::Result<()> {
    let raw = generate(&SynthConfig::nonlinear(0))?.to_dataset()?;
    let ds = select_groups(&raw, GroupMask::from_groups([FeatureGroup::Hrrr]))?;
    let a = split(&ds, SplitStrategy::Random, Fractions::default(), 0)?;
    let (train, val, test) = (ds.take_rows(&a.rows(Label::Train)), ds.take_rows(&a.rows(Label::Val)), ds.take_rows(&a.rows(Label::Test)));
    let y = test.target_vector(None)?;
    for kind in [ModelKind::Lr, ModelKind::Gbt, ModelKind::Mlp] {
        let start = std::time::Instant::now();
        let bundle = ModelBundle::fit(&train, &val, &ModelConfig::default_for(kind), 0)?;
        let m = MetricReport::compute(&y, &bundle.predict(&test)?)?;
        println!("{kind:>3}: rmse {:.3}  r2 {:.3}  ({:.1} s)", m.rmse, m.r2.unwrap_or(f64::NAN), start.elapsed().as_secs_f64());
    }
    Ok(())
}
