//! Deterministic synthetic fixtures: sites, hourly FMC observations and
//! predictor rasters whose group-level signal is known exactly.
//!
//! Each site carries five latent AR(1) processes (two for HRRR, one each for
//! NWM, VIIRS reflectance and LST) that are independent of the seasonal
//! cycle. Predictors are noisy affine views of the latents; FMC is
//!
//! ```text
//! base + site effect + seasonal + diurnal + Σ_g w_g · f_g(latents) + noise
//! ```
//!
//! clipped to [0, 400].

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Timelike, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::ingest::{
    build_training_table, dedupe_sites, write_field_stack, write_observations, write_sites, FmcObservation,
    GridField, GridGeometry, SiteRecord, Validity, FMC_MAX,
};
use crate::tabular::{Dataset, FeatureGroup, Schema, MONTHLY_STATIC};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_sites: usize,
    pub first_year: i32,
    pub n_years: u32,
    /// Trailing years for which predictor rasters are generated; earlier
    /// years only have observations (the climatology era).
    pub grid_years: u32,
    pub seed: u64,
    /// Indexed in group key order (Static, HRRR, NWM, ViirsRefl, LST).
    pub group_signal_weights: [f64; 5],
    pub noise_std: f64,
    pub viirs_hours: Vec<u32>,
    pub site_effect_std: f64,
    pub base_fmc: f64,
    pub seasonal_amplitude: f64,
    pub diurnal_amplitude: f64,
    /// Probability that a retrieval cell is cloudy.
    pub cloud_fraction: f64,
    /// Hour-to-hour autocorrelation of the latent drivers.
    pub persistence: f64,
    /// One observation every this many hours per site.
    pub obs_stride_hours: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_sites: 20,
            first_year: 2012,
            n_years: 7,
            grid_years: 1,
            seed: 0,
            group_signal_weights: [0.5, 2.0, 0.7, 1.5, 0.5],
            noise_std: 0.5,
            viirs_hours: vec![2, 14],
            site_effect_std: 2.0,
            base_fmc: 15.0,
            seasonal_amplitude: 5.0,
            diurnal_amplitude: 2.0,
            cloud_fraction: 0.2,
            persistence: 0.8,
            obs_stride_hours: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_sites == 0 || self.n_years == 0 {
            return bad("need at least one site and one year");
        }
        if self.grid_years > self.n_years {
            return bad("grid_years exceeds n_years");
        }
        if self.group_signal_weights.iter().any(|w| !w.is_finite()) {
            return bad("group weights must be finite");
        }
        if !(self.noise_std >= 0.0) || !(self.site_effect_std >= 0.0) {
            return bad("noise and site effect std must be non-negative");
        }
        if self.viirs_hours.iter().any(|&h| h > 23) {
            return bad("viirs hours must lie in 0..=23");
        }
        if !(0.0..1.0).contains(&self.cloud_fraction) || !(0.0..1.0).contains(&self.persistence) {
            return bad("cloud_fraction and persistence must lie in [0, 1)");
        }
        if self.obs_stride_hours == 0 {
            return bad("obs_stride_hours must be positive");
        }
        if ![self.base_fmc, self.seasonal_amplitude, self.diurnal_amplitude].iter().all(|v| v.is_finite()) {
            return bad("signal parameters must be finite");
        }
        Ok(())
    }

    /// Small one-year fixture whose only structure is the HRRR signal with
    /// its squared term: no seasonality, site effect or diurnal cycle.
    pub fn nonlinear(seed: u64) -> Self {
        SynthConfig {
            n_sites: 8,
            n_years: 1,
            first_year: 2020,
            seed,
            group_signal_weights: [0.0, 3.0, 0.0, 0.0, 0.0],
            site_effect_std: 0.0,
            seasonal_amplitude: 0.0,
            diurnal_amplitude: 0.0,
            obs_stride_hours: 40,
            ..SynthConfig::default()
        }
    }

    pub fn weight(&self, g: FeatureGroup) -> f64 {
        self.group_signal_weights[g.index()]
    }

    fn start(&self) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(self.first_year, 1, 1, 0, 0, 0).unwrap()
    }

    fn end(&self) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(self.first_year + self.n_years as i32, 1, 1, 0, 0, 0).unwrap()
    }

    /// First instant with predictor rasters.
    pub fn grid_start(&self) -> DateTime<Utc> {
        let y = self.first_year + (self.n_years - self.grid_years) as i32;
        Utc.with_ymd_and_hms(y, 1, 1, 0, 0, 0).unwrap()
    }
}

/// Latent drivers at one (site, hour), plus the site's static signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latents {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub v: f64,
    pub l: f64,
    pub s: f64,
}

/// Unweighted signal of one group. Each has mean zero under the generating
/// distribution; HRRR carries a squared term.
pub fn group_function(group: FeatureGroup, z: &Latents) -> f64 {
    match group {
        FeatureGroup::Static => z.s,
        FeatureGroup::Hrrr => -0.6 * z.a + 0.8 * z.b + 0.5 * (z.a * z.a - 1.0),
        FeatureGroup::Nwm => z.c,
        FeatureGroup::ViirsRefl => z.v,
        FeatureGroup::Lst => z.l,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteTruth {
    pub site_id: String,
    pub lat: f64,
    pub lon: f64,
    pub site_effect: f64,
    pub seasonal_phase: f64,
    pub seasonal_scale: f64,
    pub minute_offset: i64,
}

/// Decomposition of one observation inside the gridded era.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub site: usize,
    pub hour: DateTime<Utc>,
    /// base + site effect + seasonal + diurnal.
    pub baseline: f64,
    pub latents: Latents,
    /// Weighted contribution per group, in key order.
    pub contributions: [f64; 5],
    pub noise: f64,
    pub fmc: f64,
}

impl TruthRow {
    pub fn signal(&self) -> f64 {
        self.baseline + self.contributions.iter().sum::<f64>()
    }
}

/// The generating function: config, per-site parameters and the exact
/// decomposition of every gridded-era observation, sorted by (site, hour).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SynthConfig,
    pub sites: Vec<SiteTruth>,
    pub rows: Vec<TruthRow>,
}

impl GroundTruth {
    /// Noise-limited RMSE of a perfect predictor.
    pub fn optimal_rmse(&self) -> f64 {
        self.config.noise_std
    }

    pub fn site_index(&self, site_id: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.site_id == site_id)
    }

    pub fn lookup(&self, site_id: &str, hour: DateTime<Utc>) -> Option<&TruthRow> {
        let site = self.site_index(site_id)?;
        self.rows.binary_search_by(|r| (r.site, r.hour).cmp(&(site, hour))).ok().map(|i| &self.rows[i])
    }

    /// Seasonal plus diurnal component for a site at `hour`.
    pub fn seasonal(&self, site: usize, hour: DateTime<Utc>) -> f64 {
        seasonal_term(&self.config, &self.sites[site], hour)
    }
}

fn seasonal_term(cfg: &SynthConfig, s: &SiteTruth, t: DateTime<Utc>) -> f64 {
    let doy = crate::climatology::day_of_year(t.date_naive()) as f64;
    let season = (2.0 * std::f64::consts::PI * (doy - s.seasonal_phase) / 365.0).sin();
    let diurnal = (2.0 * std::f64::consts::PI * (t.hour() as f64 - 15.0) / 24.0).cos();
    cfg.seasonal_amplitude * s.seasonal_scale * season + cfg.diurnal_amplitude * diurnal
}

#[derive(Debug, Clone)]
pub struct SynthData {
    /// Raw site records, including superseded locations and one blank id.
    pub sites: Vec<SiteRecord>,
    pub observations: Vec<FmcObservation>,
    pub fields: Vec<GridField>,
    pub truth: GroundTruth,
}

/// (name, mean, scale, loading on a, loading on b, own-noise weight)
const HRRR_VARS: [(&str, f64, f64, f64, f64, f64); 20] = [
    ("t2m", 285.0, 8.0, 1.0, 0.0, 0.05),
    ("rh2m", 45.0, 15.0, 0.0, 1.0, 0.05),
    ("soil_moisture_availability", 40.0, 10.0, -0.2, 0.5, 0.8),
    ("skin_temperature", 287.0, 10.0, 0.9, -0.1, 0.4),
    ("mslp", 1013.0, 6.0, 0.1, 0.2, 1.0),
    ("canopy_water", 0.2, 0.1, 0.0, 0.4, 0.9),
    ("snow_cover", 10.0, 5.0, -0.3, 0.1, 1.0),
    ("snow_depth", 0.1, 0.05, -0.3, 0.1, 1.0),
    ("dewpoint2m", 275.0, 6.0, 0.5, 0.7, 0.3),
    ("specific_humidity2m", 6.0, 2.0, 0.4, 0.7, 0.4),
    ("potential_temperature2m", 300.0, 8.0, 0.95, 0.0, 0.2),
    ("cloud_cover", 40.0, 20.0, -0.2, 0.6, 0.8),
    ("snow_water_equivalent", 20.0, 10.0, -0.3, 0.1, 1.0),
    ("ghi", 300.0, 150.0, 0.6, -0.3, 0.7),
    ("sensible_heat", 80.0, 40.0, 0.6, -0.4, 0.6),
    ("latent_heat", 60.0, 30.0, 0.2, 0.5, 0.7),
    ("ground_heat", 10.0, 15.0, 0.5, -0.1, 0.8),
    ("precipitable_water", 15.0, 6.0, 0.3, 0.6, 0.5),
    ("precipitation", 0.3, 0.2, 0.0, 0.5, 0.9),
    ("precipitation_rate", 0.2, 0.15, 0.0, 0.5, 0.9),
];

const VIIRS_BANDS: [(&str, f64, f64); 12] = [
    ("rfl_m1", 0.08, 0.02),
    ("rfl_m2", 0.09, 0.02),
    ("rfl_m3", 0.10, 0.025),
    ("rfl_m4", 0.12, 0.03),
    ("rfl_m5", 0.14, 0.035),
    ("rfl_m7", 0.30, 0.05),
    ("rfl_m8", 0.28, 0.05),
    ("rfl_m10", 0.25, 0.05),
    ("rfl_m11", 0.20, 0.04),
    ("rfl_i1", 0.13, 0.035),
    ("rfl_i2", 0.30, 0.05),
    ("rfl_i3", 0.24, 0.05),
];

const BAND_NOISE: f64 = 0.3;

fn quantize(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn grid_geometry(n_sites: usize) -> GridGeometry {
    let ncols = (n_sites as f64).sqrt().ceil() as usize;
    GridGeometry { spacing_m: 375.0, origin_lat: 40.0, origin_lon: -105.0, nrows: n_sites.div_ceil(ncols), ncols }
}

/// Per-site static predictor values in schema order (11 time-invariant
/// fields) and twelve monthly values for each monthly field.
struct StaticDraw {
    values: Vec<(&'static str, f64)>,
    monthly: Vec<[f64; 12]>,
    signal: f64,
}

fn draw_static(rng: &mut ChaCha8Rng) -> StaticDraw {
    let canopy: f64 = rng.random();
    let elev_z = normal(rng);
    let signal = ((canopy - 0.5) / (1.0f64 / 12.0).sqrt() + elev_z) / 2f64.sqrt();
    let mut u = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let values = vec![
        ("canopy_fraction", canopy),
        ("soil_clay_fraction", u(0.05, 0.5)),
        ("urban_fraction", u(0.0, 0.2)),
        ("elevation", 1800.0 + 400.0 * elev_z),
        ("impermeability", u(0.0, 0.3)),
        ("irrigation", u(0.0, 0.2)),
        ("land_use", u(1.0, 20.0).floor()),
        ("soil_sand_fraction", u(0.1, 0.8)),
        ("lowest_soil_category", u(1.0, 16.0).floor()),
        ("top_soil_category", u(1.0, 16.0).floor()),
        ("snow_albedo", u(0.5, 0.8)),
    ];
    let level = [u(0.1, 0.25), u(0.2, 0.7), u(0.5, 3.0)];
    let monthly = level
        .iter()
        .map(|&base| std::array::from_fn(|_| base * (1.0 + 0.05 * normal(rng))))
        .collect();
    StaticDraw { values, monthly, signal }
}

/// Generates a fixture. Streams: 0 site layout and static fields, 1 latent
/// drivers, 2 FMC noise, 3 predictor noise, clouds and overpass offsets.
/// The draws do not depend on the group weights, so fixtures differing only
/// in weights share every latent and noise value.
pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let stream = |k: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
        r.set_stream(k);
        r
    };
    let (mut rng_site, mut rng_lat, mut rng_noise, mut rng_field) = (stream(0), stream(1), stream(2), stream(3));

    let geom = grid_geometry(cfg.n_sites);
    let deg = geom.cell_degrees();
    let n = cfg.n_sites;
    let width = n.to_string().len().max(3);
    let mut sites = Vec::with_capacity(n);
    let mut statics = Vec::with_capacity(n);
    let mut records = Vec::new();
    let start = cfg.start();
    for i in 0..n {
        let (clat, clon) = geom.center(i / geom.ncols, i % geom.ncols);
        let lat = clat + deg * rng_site.random_range(-0.2..0.2);
        let lon = clon + deg * rng_site.random_range(-0.2..0.2);
        let s = SiteTruth {
            site_id: format!("S{i:0width$}"),
            lat,
            lon,
            site_effect: cfg.site_effect_std * normal(&mut rng_site),
            seasonal_phase: 100.0 + 15.0 * normal(&mut rng_site),
            seasonal_scale: 1.0 + 0.1 * normal(&mut rng_site),
            minute_offset: rng_site.random_range(-25..=25),
        };
        statics.push(draw_static(&mut rng_site));
        if i % 7 == 3 {
            // an earlier, superseded location for a few sites
            records.push(SiteRecord {
                site_id: s.site_id.clone(),
                lat: lat + 0.5,
                lon: lon - 0.5,
                reported_at: start - Duration::days(400),
            });
        }
        records.push(SiteRecord { site_id: s.site_id.clone(), lat, lon, reported_at: start });
        sites.push(s);
    }
    records.push(SiteRecord { site_id: String::new(), lat: geom.origin_lat, lon: geom.origin_lon, reported_at: start });
    let stride_phase: Vec<usize> = (0..n).map(|_| rng_site.random_range(0..cfg.obs_stride_hours)).collect();

    // each cell copies the predictors of one site
    let n_cells = geom.nrows * geom.ncols;
    let cell_site: Vec<usize> = (0..n_cells).map(|c| c % n).collect();

    let mut fields = Vec::new();
    for (j, name) in [
        "canopy_fraction",
        "soil_clay_fraction",
        "urban_fraction",
        "elevation",
        "impermeability",
        "irrigation",
        "land_use",
        "soil_sand_fraction",
        "lowest_soil_category",
        "top_soil_category",
        "snow_albedo",
    ]
    .iter()
    .enumerate()
    {
        debug_assert_eq!(statics[0].values[j].0, *name);
        let vals = cell_site.iter().map(|&s| Some(quantize(statics[s].values[j].1))).collect();
        fields.push(GridField::new(*name, FeatureGroup::Static, geom, Validity::Static, vals)?);
    }
    for (k, name) in MONTHLY_STATIC.iter().enumerate() {
        for m in 0..12 {
            let vals = cell_site.iter().map(|&s| Some(quantize(statics[s].monthly[k][m]))).collect();
            fields.push(GridField::new(*name, FeatureGroup::Static, geom, Validity::Month(m as u32 + 1), vals)?);
        }
    }

    let rho = cfg.persistence;
    let innov = (1.0 - rho * rho).sqrt();
    let mut state: Vec<[f64; 5]> = (0..n).map(|_| std::array::from_fn(|_| normal(&mut rng_lat))).collect();
    let grid_start = cfg.grid_start();
    let end = cfg.end();
    let mut observations = Vec::new();
    let mut rows = Vec::new();
    let mut latents = vec![Latents { a: 0.0, b: 0.0, c: 0.0, v: 0.0, l: 0.0, s: 0.0 }; n];
    let mut t = start;
    let mut step = 0usize;
    while t < end {
        if step > 0 {
            for st in state.iter_mut() {
                for x in st.iter_mut() {
                    *x = rho * *x + innov * normal(&mut rng_lat);
                }
            }
        }
        for i in 0..n {
            let [a, b, c, v, l] = state[i];
            let z = Latents { a, b, c, v, l, s: statics[i].signal };
            latents[i] = z;
            let baseline = cfg.base_fmc + sites[i].site_effect + seasonal_term(cfg, &sites[i], t);
            let contributions: [f64; 5] = std::array::from_fn(|g| {
                let group = FeatureGroup::ALL[g];
                cfg.weight(group) * group_function(group, &z)
            });
            let noise = cfg.noise_std * normal(&mut rng_noise);
            if !(step + stride_phase[i]).is_multiple_of(cfg.obs_stride_hours) {
                continue;
            }
            let raw = baseline + contributions.iter().sum::<f64>() + noise;
            let fmc = ((raw.clamp(0.0, FMC_MAX)) * 100.0).round() / 100.0;
            let ts = t + Duration::minutes(sites[i].minute_offset);
            observations.push(FmcObservation::new(sites[i].site_id.clone(), ts, fmc));
            if t >= grid_start {
                rows.push(TruthRow { site: i, hour: t, baseline, latents: z, contributions, noise, fmc });
            }
        }
        if t >= grid_start {
            push_hourly_fields(&mut fields, geom, &cell_site, &latents, t, &mut rng_field)?;
            if cfg.viirs_hours.contains(&t.hour()) {
                push_retrieval(&mut fields, geom, &cell_site, &latents, t, cfg.cloud_fraction, &mut rng_field)?;
            }
        }
        t += Duration::hours(1);
        step += 1;
    }
    rows.sort_by_key(|r| (r.site, r.hour));

    Ok(SynthData { sites: records, observations, fields, truth: GroundTruth { config: cfg.clone(), sites, rows } })
}

fn push_hourly_fields(
    fields: &mut Vec<GridField>,
    geom: GridGeometry,
    cell_site: &[usize],
    z: &[Latents],
    t: DateTime<Utc>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    for &(name, mean, scale, la, lb, ln) in &HRRR_VARS {
        let own: Vec<f64> = z.iter().map(|_| normal(rng)).collect();
        let vals = cell_site
            .iter()
            .map(|&s| Some(quantize(mean + scale * (la * z[s].a + lb * z[s].b + ln * own[s]))))
            .collect();
        fields.push(GridField::new(name, FeatureGroup::Hrrr, geom, Validity::At(t), vals)?);
    }
    let own: Vec<f64> = z.iter().map(|_| normal(rng)).collect();
    let sm = cell_site.iter().map(|&s| Some(quantize(0.25 + 0.06 * z[s].c))).collect();
    let et = cell_site.iter().map(|&s| Some(quantize(0.15 + 0.04 * z[s].c + 0.03 * own[s]))).collect();
    fields.push(GridField::new("nwm_soil_moisture", FeatureGroup::Nwm, geom, Validity::At(t), sm)?);
    fields.push(GridField::new("nwm_evapotranspiration", FeatureGroup::Nwm, geom, Validity::At(t), et)?);
    Ok(())
}

/// One overpass near hour `t`: twelve correlated bands and LST sharing a
/// cloud mask, stamped a few minutes off the hour.
fn push_retrieval(
    fields: &mut Vec<GridField>,
    geom: GridGeometry,
    cell_site: &[usize],
    z: &[Latents],
    t: DateTime<Utc>,
    cloud_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let when = t + Duration::minutes(rng.random_range(-25..=25));
    let clear: Vec<bool> = cell_site.iter().map(|_| rng.random::<f64>() >= cloud_fraction).collect();
    for &(name, mean, scale) in &VIIRS_BANDS {
        let vals = cell_site
            .iter()
            .enumerate()
            .map(|(c, &s)| {
                let e = normal(rng);
                clear[c].then(|| quantize(mean + scale * (z[s].v + BAND_NOISE * e)))
            })
            .collect();
        fields.push(GridField::new(name, FeatureGroup::ViirsRefl, geom, Validity::At(when), vals)?);
    }
    let vals = cell_site
        .iter()
        .enumerate()
        .map(|(c, &s)| {
            let e = normal(rng);
            clear[c].then(|| quantize(295.0 + 8.0 * (z[s].l + 0.05 * e)))
        })
        .collect();
    fields.push(GridField::new("lst", FeatureGroup::Lst, geom, Validity::At(when), vals)?);
    Ok(())
}

impl SynthData {
    /// The training table ingestion would build from these records.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let (sites, _) = dedupe_sites(&self.sites);
        build_training_table(&self.observations, &sites, &self.fields, &Schema::default_fmc())
    }

    /// Writes `sites.csv`, `observations.csv`, one `fields/<name>.csv` stack
    /// per variable and `truth.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let fdir = dir.join("fields");
        fs::create_dir_all(&fdir)?;
        write_sites(BufWriter::new(File::create(dir.join("sites.csv"))?), &self.sites)?;
        write_observations(BufWriter::new(File::create(dir.join("observations.csv"))?), &self.observations)?;
        let mut stacks: BTreeMap<&str, Vec<GridField>> = BTreeMap::new();
        for f in &self.fields {
            stacks.entry(f.name.as_str()).or_default().push(f.clone());
        }
        for (name, stack) in &stacks {
            write_field_stack(BufWriter::new(File::create(fdir.join(format!("{name}.csv")))?), stack)?;
        }
        let truth = serde_json::to_string_pretty(&TruthSummary { config: &self.truth.config, sites: &self.truth.sites })?;
        fs::write(dir.join("truth.json"), truth)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct TruthSummary<'a> {
    config: &'a SynthConfig,
    sites: &'a [SiteTruth],
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig { n_sites: 4, n_years: 1, first_year: 2020, ..Default::default() }
    }

    #[test]
    fn deterministic() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.observations, b.observations);
        assert_eq!(a.fields, b.fields);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn viirs_only_at_retrieval_hours() {
        let d = generate(&small()).unwrap();
        for f in d.fields.iter().filter(|f| f.group == FeatureGroup::ViirsRefl) {
            let Validity::At(t) = f.validity else { panic!("timed field expected") };
            assert!([2, 14].contains(&crate::ingest::assign_nearest_hour(t).hour()));
        }
        assert_eq!(d.fields.iter().filter(|f| f.name == "rfl_m1").count(), 366 * 2);
    }

    #[test]
    fn truth_reconstructs_fmc() {
        let d = generate(&small()).unwrap();
        for r in &d.truth.rows {
            let raw = r.signal() + r.noise;
            assert!((raw.clamp(0.0, 400.0) - r.fmc).abs() <= 0.005 + 1e-9);
        }
        assert!(d.observations.iter().all(|o| o.qc_pass));
    }

    #[test]
    fn rejects_bad_config() {
        assert!(generate(&SynthConfig { noise_std: -1.0, ..small() }).is_err());
        assert!(generate(&SynthConfig { group_signal_weights: [f64::NAN, 0.0, 0.0, 0.0, 0.0], ..small() }).is_err());
    }
}
