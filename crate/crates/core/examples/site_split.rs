// Usage: cargo run --release --example site_split
//
// Compares row-level and site-level partitions of the same table.

use std::collections::BTreeSet;

use fuelmoist::split::{make_folds, split, Fractions, Label, SplitStrategy};
use fuelmoist::synth::{generate, SynthConfig};

fn main() -> fuelmoist::Result<()> {
    let cfg = SynthConfig { n_sites: 30, n_years: 1, first_year: 2021, obs_stride_hours: 6, ..SynthConfig::default() };
    let ds = generate(&cfg)?.to_dataset()?;
    for strategy in [SplitStrategy::Random, SplitStrategy::Site] {
        let a = split(&ds, strategy, Fractions::default(), 0)?;
        let sites = |l| a.rows(l).iter().map(|&r| ds.site_id(r).to_string()).collect::<BTreeSet<_>>();
        let (train, test) = (sites(Label::Train), sites(Label::Test));
        println!(
            "{strategy}: train {} / val {} / test {} rows; {} test sites, {} shared with train",
            a.count(Label::Train),
            a.count(Label::Val),
            a.count(Label::Test),
            test.len(),
            test.intersection(&train).count()
        );
        let folds = make_folds(&ds, &a, 5, 0)?;
        for (i, f) in folds.folds.iter().enumerate() {
            println!("  fold {i}: {} train, {} val", f.train.len(), f.val.len());
        }
    }
    Ok(())
}
