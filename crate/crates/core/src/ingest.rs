//! Observation quality control, site deduplication and the spatial/temporal
//! pairing of gridded predictor fields with fuel-moisture observations.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use chrono::{DateTime, Duration, DurationRound, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::climatology::day_of_year;
use crate::error::{Error, Result};
use crate::tabular::{format_cell, format_timestamp, parse_cell, parse_timestamp, Column, Dataset, FeatureGroup, Schema};

/// Upper bound of the accepted fuel-moisture range, percent.
pub const FMC_MAX: f64 = 400.0;
pub const METERS_PER_DEGREE: f64 = 111_320.0;
const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// True iff `value` lies in the inclusive range [0, 400] percent.
pub fn qc_range_check(value: f64) -> Result<bool> {
    if !value.is_finite() {
        return Err(Error::InvalidObservation(value));
    }
    Ok((0.0..=FMC_MAX).contains(&value))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteRecord {
    pub site_id: String,
    pub lat: f64,
    pub lon: f64,
    pub reported_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmcObservation {
    pub site_id: String,
    pub timestamp: DateTime<Utc>,
    pub fmc: f64,
    pub qc_pass: bool,
}

impl FmcObservation {
    /// Builds an observation with its QC flag set from the range check.
    /// Non-finite values are kept but flagged as failing.
    pub fn new(site_id: impl Into<String>, timestamp: DateTime<Utc>, fmc: f64) -> Self {
        let qc_pass = qc_range_check(fmc).unwrap_or(false);
        FmcObservation { site_id: site_id.into(), timestamp, fmc, qc_pass }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChangeKind {
    /// One historical location of a site that moved.
    LocationChange,
    /// A record that could not be used.
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangelogEntry {
    pub site_id: String,
    pub kind: ChangeKind,
    pub lat: f64,
    pub lon: f64,
    pub reported_at: DateTime<Utc>,
    pub detail: String,
}

/// Keeps the most recently reported location of every site. Sites that were
/// reported at more than one location log every distinct location; records
/// with a blank identifier or impossible coordinates are logged as rejects.
pub fn dedupe_sites(records: &[SiteRecord]) -> (Vec<SiteRecord>, Vec<ChangelogEntry>) {
    let mut changelog = Vec::new();
    let mut by_site: BTreeMap<&str, Vec<&SiteRecord>> = BTreeMap::new();
    for rec in records {
        let reason = if rec.site_id.trim().is_empty() {
            Some("missing site identifier")
        } else if !(-90.0..=90.0).contains(&rec.lat) || !(-180.0..=180.0).contains(&rec.lon) {
            Some("coordinates out of range")
        } else {
            None
        };
        match reason {
            Some(r) => changelog.push(ChangelogEntry {
                site_id: rec.site_id.clone(),
                kind: ChangeKind::Rejected,
                lat: rec.lat,
                lon: rec.lon,
                reported_at: rec.reported_at,
                detail: r.to_string(),
            }),
            None => by_site.entry(rec.site_id.as_str()).or_default().push(rec),
        }
    }
    let mut sites = Vec::with_capacity(by_site.len());
    for (id, mut recs) in by_site {
        // stable: among equal timestamps the later input record wins
        recs.sort_by_key(|r| r.reported_at);
        let latest = *recs.last().expect("non-empty group");
        let mut locations: Vec<&SiteRecord> = Vec::new();
        for r in &recs {
            if !locations.iter().any(|l| l.lat == r.lat && l.lon == r.lon) {
                locations.push(r);
            }
        }
        if locations.len() > 1 {
            for l in locations {
                changelog.push(ChangelogEntry {
                    site_id: id.to_string(),
                    kind: ChangeKind::LocationChange,
                    lat: l.lat,
                    lon: l.lon,
                    reported_at: l.reported_at,
                    detail: if l.lat == latest.lat && l.lon == latest.lon { "kept" } else { "superseded" }.into(),
                });
            }
        }
        sites.push(latest.clone());
    }
    (sites, changelog)
}

/// Rounds to the nearest whole hour; minute 30 and later round up.
pub fn assign_nearest_hour(t: DateTime<Utc>) -> DateTime<Utc> {
    let floor = t.duration_trunc(Duration::hours(1)).expect("hour truncation");
    if t.minute() >= 30 {
        floor + Duration::hours(1)
    } else {
        floor
    }
}

/// When a raster applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Validity {
    /// Time-invariant surface field.
    Static,
    /// Monthly climatology value for month 1..=12.
    Month(u32),
    /// Snapshot valid at one instant.
    At(DateTime<Utc>),
}

impl Validity {
    fn encode(&self) -> String {
        match self {
            Validity::Static => "static".into(),
            Validity::Month(m) => format!("M{m:02}"),
            Validity::At(t) => format_timestamp(*t),
        }
    }

    fn decode(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "static" {
            return Ok(Validity::Static);
        }
        if let Some(m) = s.strip_prefix('M') {
            let m: u32 = m.parse().map_err(|_| Error::Parse(format!("month tag `{s}`")))?;
            if !(1..=12).contains(&m) {
                return Err(Error::Parse(format!("month tag `{s}`")));
            }
            return Ok(Validity::Month(m));
        }
        Ok(Validity::At(parse_timestamp(s)?))
    }
}

/// Geometry of a regular lat/lon raster. `origin` is the center of cell
/// (0, 0); rows advance northward and columns eastward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub spacing_m: f64,
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub nrows: usize,
    pub ncols: usize,
}

impl GridGeometry {
    pub fn cell_degrees(&self) -> f64 {
        self.spacing_m / METERS_PER_DEGREE
    }

    pub fn center(&self, row: usize, col: usize) -> (f64, f64) {
        let d = self.cell_degrees();
        (self.origin_lat + row as f64 * d, self.origin_lon + col as f64 * d)
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        let d = self.cell_degrees();
        let (lat0, lon0) = (self.origin_lat - d / 2.0, self.origin_lon - d / 2.0);
        lat >= lat0 && lat <= lat0 + self.nrows as f64 * d && lon >= lon0 && lon <= lon0 + self.ncols as f64 * d
    }

    /// Row-major index of the cell whose center is nearest in great-circle
    /// distance; ties go to the lowest index.
    pub fn nearest_cell(&self, lat: f64, lon: f64) -> Option<usize> {
        if !self.contains(lat, lon) {
            return None;
        }
        let d = self.cell_degrees();
        let r0 = ((lat - self.origin_lat) / d).round().clamp(0.0, (self.nrows - 1) as f64) as usize;
        let c0 = ((lon - self.origin_lon) / d).round().clamp(0.0, (self.ncols - 1) as f64) as usize;
        let mut best: Option<(f64, usize)> = None;
        for r in r0.saturating_sub(1)..=(r0 + 1).min(self.nrows - 1) {
            for c in c0.saturating_sub(1)..=(c0 + 1).min(self.ncols - 1) {
                let (clat, clon) = self.center(r, c);
                let dist = great_circle_m(lat, lon, clat, clon);
                let idx = r * self.ncols + c;
                best = match best {
                    Some((bd, bi)) if !closer(dist, idx, bd, bi) => Some((bd, bi)),
                    _ => Some((dist, idx)),
                };
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Distances within this relative tolerance are treated as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Whether candidate (dist, idx) beats the incumbent under the tie rule.
pub fn closer(dist: f64, idx: usize, best_dist: f64, best_idx: usize) -> bool {
    let tol = TIE_TOLERANCE * best_dist.max(dist).max(1e-9);
    if (dist - best_dist).abs() <= tol {
        idx < best_idx
    } else {
        dist < best_dist
    }
}

/// Haversine distance in meters.
pub fn great_circle_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// One raster of one predictor variable.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub name: String,
    pub group: FeatureGroup,
    pub geometry: GridGeometry,
    pub validity: Validity,
    /// Row-major cells; `None` marks invalid retrievals.
    pub values: Vec<Option<f64>>,
}

impl GridField {
    pub fn new(
        name: impl Into<String>,
        group: FeatureGroup,
        geometry: GridGeometry,
        validity: Validity,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        let name = name.into();
        if !(geometry.spacing_m > 0.0) || geometry.nrows == 0 || geometry.ncols == 0 {
            return Err(Error::InvalidArgument(format!("field `{name}` has an empty or degenerate grid")));
        }
        if values.len() != geometry.nrows * geometry.ncols {
            return Err(Error::InvalidArgument(format!(
                "field `{name}` has {} cells for a {}x{} grid",
                values.len(),
                geometry.nrows,
                geometry.ncols
            )));
        }
        let values = values.into_iter().map(|v| v.filter(|x| x.is_finite())).collect();
        Ok(GridField { name, group, geometry, validity, values })
    }
}

/// Value of the grid cell nearest to (lat, lon); `None` if that cell is
/// invalid.
pub fn nearest_neighbor_sample(field: &GridField, lat: f64, lon: f64) -> Result<Option<f64>> {
    let idx = field.geometry.nearest_cell(lat, lon).ok_or_else(|| Error::OutOfDomain {
        field: field.name.clone(),
        lat,
        lon,
    })?;
    Ok(field.values[idx])
}

/// Coarsens a raster by averaging the valid cells of each `factor`x`factor`
/// block; blocks without valid cells become invalid.
pub fn block_average(field: &GridField, factor: usize) -> Result<GridField> {
    if factor == 0 {
        return Err(Error::InvalidArgument("block factor must be positive".into()));
    }
    let g = field.geometry;
    let d = g.cell_degrees();
    let shift = (factor as f64 - 1.0) / 2.0 * d;
    let geometry = GridGeometry {
        spacing_m: g.spacing_m * factor as f64,
        origin_lat: g.origin_lat + shift,
        origin_lon: g.origin_lon + shift,
        nrows: g.nrows.div_ceil(factor),
        ncols: g.ncols.div_ceil(factor),
    };
    let mut values = Vec::with_capacity(geometry.nrows * geometry.ncols);
    for br in 0..geometry.nrows {
        for bc in 0..geometry.ncols {
            let mut sum = 0.0;
            let mut n = 0usize;
            for r in br * factor..((br + 1) * factor).min(g.nrows) {
                for c in bc * factor..((bc + 1) * factor).min(g.ncols) {
                    if let Some(v) = field.values[r * g.ncols + c] {
                        sum += v;
                        n += 1;
                    }
                }
            }
            values.push(if n > 0 { Some(sum / n as f64) } else { None });
        }
    }
    GridField::new(field.name.clone(), field.group, geometry, field.validity, values)
}

/// Day-of-year anchors (the 15th of each month in a 365-day year).
pub fn month_anchors() -> [u32; 12] {
    const DAYS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
    let mut out = [0; 12];
    let mut before = 0;
    for m in 0..12 {
        out[m] = before + 15;
        before += DAYS[m];
    }
    out
}

/// Linear interpolation of twelve monthly values to day-of-year `doy`
/// (1..=365), anchored at the 15th of each month and wrapping across the
/// year end. Absent if either bracketing anchor is absent.
pub fn interpolate_monthly(monthly: &[Option<f64>; 12], doy: u32) -> Option<f64> {
    let anchors = month_anchors();
    let d = doy as f64;
    let (lo, hi, lo_day, hi_day) = if doy < anchors[0] {
        (11, 0, anchors[11] as f64 - 365.0, anchors[0] as f64)
    } else if doy >= anchors[11] {
        (11, 0, anchors[11] as f64, anchors[0] as f64 + 365.0)
    } else {
        let m = (0..11).find(|&m| doy >= anchors[m] && doy < anchors[m + 1]).expect("bracket");
        (m, m + 1, anchors[m] as f64, anchors[m + 1] as f64)
    };
    let (a, b) = (monthly[lo]?, monthly[hi]?);
    let w = (d - lo_day) / (hi_day - lo_day);
    Some(a + w * (b - a))
}

enum Source<'a> {
    Static(&'a GridField),
    Monthly([Option<&'a GridField>; 12]),
    Timed(HashMap<DateTime<Utc>, &'a GridField>),
}

/// Pairs QC-passing observations with predictor fields, producing one row per
/// (site, hour). Rows are ordered by site id then hour.
pub fn build_training_table(
    obs: &[FmcObservation],
    sites: &[SiteRecord],
    fields: &[GridField],
    schema: &Schema,
) -> Result<Dataset> {
    let mut sources: Vec<Option<Source>> = (0..schema.len()).map(|_| None).collect();
    // best granule per (column, hour): smallest offset from the hour, then earliest
    let mut timed_offsets: Vec<HashMap<DateTime<Utc>, i64>> = vec![HashMap::new(); schema.len()];
    for f in fields {
        let j = schema
            .position(&f.name)
            .ok_or_else(|| Error::Schema(format!("field `{}` is not in the schema", f.name)))?;
        let spec = &schema.columns()[j];
        if spec.group != f.group {
            return Err(Error::Schema(format!(
                "field `{}` tagged {} but schema says {}",
                f.name, f.group, spec.group
            )));
        }
        match f.validity {
            Validity::Static => match &sources[j] {
                None => sources[j] = Some(Source::Static(f)),
                Some(_) => return Err(Error::Schema(format!("conflicting rasters for static field `{}`", f.name))),
            },
            Validity::Month(m) => {
                let slot = sources[j].get_or_insert(Source::Monthly([None; 12]));
                match slot {
                    Source::Monthly(arr) => arr[(m - 1) as usize] = Some(f),
                    _ => return Err(Error::Schema(format!("field `{}` mixes temporal kinds", f.name))),
                }
            }
            Validity::At(t) => {
                let hour = assign_nearest_hour(t);
                let offset = (t - hour).num_seconds().abs();
                let slot = sources[j].get_or_insert_with(|| Source::Timed(HashMap::new()));
                match slot {
                    Source::Timed(map) => {
                        let better = match timed_offsets[j].get(&hour) {
                            None => true,
                            Some(&prev) => offset < prev,
                        };
                        if better {
                            timed_offsets[j].insert(hour, offset);
                            map.insert(hour, f);
                        }
                    }
                    _ => return Err(Error::Schema(format!("field `{}` mixes temporal kinds", f.name))),
                }
            }
        }
    }

    let site_loc: HashMap<&str, (f64, f64)> = sites.iter().map(|s| (s.site_id.as_str(), (s.lat, s.lon))).collect();
    let mut keyed: BTreeMap<(&str, DateTime<Utc>), f64> = BTreeMap::new();
    for o in obs.iter().filter(|o| o.qc_pass) {
        if !site_loc.contains_key(o.site_id.as_str()) {
            continue;
        }
        keyed.entry((o.site_id.as_str(), assign_nearest_hour(o.timestamp))).or_insert(o.fmc);
    }

    // nearest-cell lookups are cached per (geometry, site)
    let site_key = |s: &str| *site_loc.get_key_value(s).expect("known site").0;
    let mut cell_cache: HashMap<(u64, u64, u64, usize, usize, &str), Option<usize>> = HashMap::new();
    let mut sample = |f: &GridField, site: &str| -> Result<Option<f64>> {
        let g = f.geometry;
        let key = (g.spacing_m.to_bits(), g.origin_lat.to_bits(), g.origin_lon.to_bits(), g.nrows, g.ncols, site_key(site));
        let idx = match cell_cache.get(&key) {
            Some(i) => *i,
            None => {
                let (lat, lon) = site_loc[site];
                let i = g.nearest_cell(lat, lon);
                cell_cache.insert(key, i);
                i
            }
        };
        match idx {
            Some(i) => Ok(f.values[i]),
            None => {
                let (lat, lon) = site_loc[site];
                Err(Error::OutOfDomain { field: f.name.clone(), lat, lon })
            }
        }
    };

    let n = keyed.len();
    let mut site_ids: Vec<Arc<str>> = Vec::with_capacity(n);
    let mut timestamps = Vec::with_capacity(n);
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(n); schema.len()];
    let mut fmc = Vec::with_capacity(n);
    let mut interned: HashMap<&str, Arc<str>> = HashMap::new();
    for (&(site, hour), &value) in &keyed {
        let id = interned.entry(site).or_insert_with(|| Arc::from(site)).clone();
        site_ids.push(id);
        timestamps.push(hour);
        fmc.push(Some(value));
        let doy = day_of_year(hour.date_naive());
        for (j, src) in sources.iter().enumerate() {
            let v = match src {
                None => None,
                Some(Source::Static(f)) => sample(f, site)?,
                Some(Source::Monthly(months)) => {
                    let mut vals = [None; 12];
                    for (m, f) in months.iter().enumerate() {
                        if let Some(f) = f {
                            vals[m] = sample(f, site)?;
                        }
                    }
                    interpolate_monthly(&vals, doy)
                }
                Some(Source::Timed(map)) => match map.get(&hour) {
                    Some(f) => sample(f, site)?,
                    None => None,
                },
            };
            cells[j].push(v);
        }
    }
    Dataset::new(
        schema.clone(),
        site_ids,
        timestamps,
        cells.into_iter().map(Column::from_options).collect(),
        Column::from_options(fmc),
    )
}

// ---------------------------------------------------------------------------
// CSV formats

pub fn read_sites<R: Read>(r: R) -> Result<Vec<SiteRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != 4 {
            return Err(Error::Parse("sites CSV rows need site_id,lat,lon,reported_at".into()));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("number `{s}`")));
        out.push(SiteRecord {
            site_id: rec[0].to_string(),
            lat: num(&rec[1])?,
            lon: num(&rec[2])?,
            reported_at: parse_timestamp(&rec[3])?,
        });
    }
    Ok(out)
}

pub fn write_sites<W: Write>(w: W, sites: &[SiteRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["site_id", "lat", "lon", "reported_at"])?;
    for s in sites {
        wr.write_record([s.site_id.clone(), s.lat.to_string(), s.lon.to_string(), format_timestamp(s.reported_at)])?;
    }
    wr.flush()?;
    Ok(())
}

/// Reads `site_id,timestamp,fmc`; QC flags are recomputed from the values.
pub fn read_observations<R: Read>(r: R) -> Result<Vec<FmcObservation>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::Parse("observation rows need site_id,timestamp,fmc".into()));
        }
        let fmc: f64 = rec[2].trim().parse().map_err(|_| Error::Parse(format!("fmc `{}`", &rec[2])))?;
        out.push(FmcObservation::new(&rec[0], parse_timestamp(&rec[1])?, fmc));
    }
    Ok(out)
}

pub fn write_observations<W: Write>(w: W, obs: &[FmcObservation]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["site_id", "timestamp", "fmc"])?;
    for o in obs {
        wr.write_record([o.site_id.as_str(), &format_timestamp(o.timestamp), &o.fmc.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_changelog<W: Write>(w: W, log: &[ChangelogEntry]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["site_id", "event", "lat", "lon", "reported_at", "detail"])?;
    for e in log {
        let kind = match e.kind {
            ChangeKind::LocationChange => "location_change",
            ChangeKind::Rejected => "rejected",
        };
        wr.write_record([
            e.site_id.clone(),
            kind.to_string(),
            e.lat.to_string(),
            e.lon.to_string(),
            format_timestamp(e.reported_at),
            e.detail.clone(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes a stack of rasters of one variable sharing a geometry. The file
/// starts with `# key=value` header lines (name, group, spacing, origin_lat,
/// origin_lon, nrows, ncols) followed by a CSV table `valid,c0..cN` with one
/// row-major raster per line; `valid` is `static`, `M01`..`M12`, or an
/// ISO-8601 UTC time. Empty cells are invalid.
pub fn write_field_stack<W: Write>(mut w: W, fields: &[GridField]) -> Result<()> {
    let first = fields.first().ok_or_else(|| Error::InvalidArgument("empty field stack".into()))?;
    if fields.iter().any(|f| f.name != first.name || f.group != first.group || f.geometry != first.geometry) {
        return Err(Error::InvalidArgument("field stack mixes variables or geometries".into()));
    }
    let g = first.geometry;
    writeln!(w, "# name={}", first.name)?;
    writeln!(w, "# group={}", first.group)?;
    writeln!(w, "# spacing={}", g.spacing_m)?;
    writeln!(w, "# origin_lat={}", g.origin_lat)?;
    writeln!(w, "# origin_lon={}", g.origin_lon)?;
    writeln!(w, "# nrows={}", g.nrows)?;
    writeln!(w, "# ncols={}", g.ncols)?;
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["valid".to_string()];
    header.extend((0..g.nrows * g.ncols).map(|i| format!("c{i}")));
    wr.write_record(&header)?;
    let mut rec = Vec::with_capacity(header.len());
    for f in fields {
        rec.clear();
        rec.push(f.validity.encode());
        rec.extend(f.values.iter().map(|v| format_cell(*v)));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_field_stack<R: Read>(r: R) -> Result<Vec<GridField>> {
    let mut br = BufReader::new(r);
    let mut meta: HashMap<String, String> = HashMap::new();
    let mut line = String::new();
    let mut pending = String::new();
    loop {
        line.clear();
        if br.read_line(&mut line)? == 0 {
            break;
        }
        match line.strip_prefix('#') {
            Some(rest) => {
                let (k, v) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("field header line `{}`", line.trim())))?;
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            None => {
                pending = line.clone();
                break;
            }
        }
    }
    let get = |k: &str| meta.get(k).ok_or_else(|| Error::Parse(format!("field header lacks `{k}`")));
    let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| Error::Parse(format!("header `{k}`"))) };
    let name = get("name")?.clone();
    let group: FeatureGroup = get("group")?.parse()?;
    let geometry = GridGeometry {
        spacing_m: num("spacing")?,
        origin_lat: num("origin_lat")?,
        origin_lon: num("origin_lon")?,
        nrows: num("nrows")? as usize,
        ncols: num("ncols")? as usize,
    };
    let body = std::io::Cursor::new(pending.into_bytes()).chain(br);
    let mut rd = csv::Reader::from_reader(body);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let validity = Validity::decode(&rec[0])?;
        let values = rec.iter().skip(1).map(parse_cell).collect::<Result<Vec<_>>>()?;
        out.push(GridField::new(name.clone(), group, geometry, validity, values)?);
    }
    Ok(out)
}
