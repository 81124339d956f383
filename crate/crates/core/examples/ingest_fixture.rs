// Usage: cargo run --release --example ingest_fixture
//
// Round-trips a synthetic archive through the file reader, at both grid
// resolutions, with early years held back for the climatology.

use fuelmoist::harness::{ingest_dir, Resolution};
use fuelmoist::synth::{generate, SynthConfig};
use fuelmoist::tabular::{select_groups, FeatureGroup, GroupMask};

fn main() -> fuelmoist::Result<()> {
    let dir = std::env::temp_dir().join("fuelmoist-ingest");
    let cfg = SynthConfig { n_sites: 5, n_years: 3, first_year: 2019, ..SynthConfig::default() };
    generate(&cfg)?.write_dir(&dir)?;

    for res in [Resolution::Fine, Resolution::Coarse] {
        let ing = ingest_dir(&dir, res, Some(cfg.grid_start()))?;
        println!(
            "{res}: {} observations ({} failed QC), {} table rows, {} held for climatology, {} changelog entries",
            ing.n_observations,
            ing.n_qc_failed,
            ing.dataset.n_rows(),
            ing.clim_observations.len(),
            ing.changelog.len()
        );
        for g in FeatureGroup::ALL {
            let rows = select_groups(&ing.dataset, GroupMask::from_groups([g])).map(|d| d.n_rows()).unwrap_or(0);
            println!("  complete rows with only {:<10} {rows}", g.name());
        }
    }
    Ok(())
}
