// Usage: cargo run --release --example climatology_baselines
//
// Builds DOY and DOY-HR baselines from six years of observations and
// reports how often each is defined.

use chrono::{TimeZone, Utc};
use fuelmoist::climatology::{build_climatology, ClimatologyKind};
use fuelmoist::synth::{generate, SynthConfig};

fn main() -> fuelmoist::Result<()> {
    let cfg = SynthConfig { n_sites: 3, n_years: 6, grid_years: 0, ..SynthConfig::default() };
    let data = generate(&cfg)?;
    for kind in [ClimatologyKind::Doy, ClimatologyKind::DoyHr] {
        let table = build_climatology(&data.observations, kind)?;
        let present = table.entries().filter(|(_, e)| e.mean.is_some()).count();
        println!("{}: {} entries, {present} unmasked", kind.label(), table.len());
        let t = Utc.with_ymd_and_hms(2015, 7, 4, 14, 0, 0).unwrap();
        for s in &data.truth.sites {
            println!("  {} on {t}: {:?}", s.site_id, table.predict(&s.site_id, t).map(|v| (v * 100.0).round() / 100.0));
        }
    }
    let short = SynthConfig { n_years: 5, ..cfg };
    let table = build_climatology(&generate(&short)?.observations, ClimatologyKind::Doy)?;
    println!("with five years every entry is masked: {}", table.entries().all(|(_, e)| e.mean.is_none()));
    Ok(())
}
