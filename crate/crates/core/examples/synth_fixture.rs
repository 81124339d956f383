// Usage: cargo run --release --example synth_fixture [out_dir]
//
// Writes a small synthetic station/field archive and prints what the
// generator knows that a model never sees.

use fuelmoist::synth::{generate, SynthConfig};
use fuelmoist::tabular::FeatureGroup;

fn main() -> fuelmoist::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("fuelmoist-synth").display().to_string());
    let cfg = SynthConfig { n_sites: 6, n_years: 2, first_year: 2020, ..SynthConfig::default() };
    let data = generate(&cfg)?;
    data.write_dir(std::path::Path::new(&out))?;

    println!("{} site records, {} observations, {} gridded fields", data.sites.len(), data.observations.len(), data.fields.len());
    println!("noise floor (best achievable RMSE): {:.3}", data.truth.optimal_rmse());
    let n = data.truth.rows.len() as f64;
    for g in FeatureGroup::ALL {
        let var = data.truth.rows.iter().map(|r| r.contributions[g.index()].powi(2)).sum::<f64>() / n;
        println!("  {:<10} weight {:>4}  mean squared contribution {var:.3}", g.name(), cfg.weight(g));
    }
    println!("written to {out}");
    Ok(())
}
