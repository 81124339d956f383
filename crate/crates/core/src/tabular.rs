//! Columnar dataset with feature-group tagging, explicit missing values and
//! z-score standardization.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, SecondsFormat, Utc};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the predictand column in files and standardization parameters.
pub const TARGET: &str = "fmc";

/// The five predictor groups, in mask-key order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureGroup {
    Static,
    #[serde(rename = "HRRR")]
    Hrrr,
    #[serde(rename = "NWM")]
    Nwm,
    ViirsRefl,
    #[serde(rename = "LST")]
    Lst,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 5] = [
        FeatureGroup::Static,
        FeatureGroup::Hrrr,
        FeatureGroup::Nwm,
        FeatureGroup::ViirsRefl,
        FeatureGroup::Lst,
    ];

    /// Position of the group in a 5-bit mask key.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Static => "Static",
            FeatureGroup::Hrrr => "HRRR",
            FeatureGroup::Nwm => "NWM",
            FeatureGroup::ViirsRefl => "ViirsRefl",
            FeatureGroup::Lst => "LST",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown feature group `{s}`")))
    }
}

/// A set of feature groups, written as a 5-character bit key such as `01111`
/// in (Static, HRRR, NWM, ViirsRefl, LST) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GroupMask(u8);

impl GroupMask {
    pub const FULL: GroupMask = GroupMask(0b11111);

    pub fn empty() -> Self {
        GroupMask(0)
    }

    pub fn from_groups<I: IntoIterator<Item = FeatureGroup>>(groups: I) -> Self {
        groups.into_iter().fold(GroupMask(0), |m, g| m.with(g))
    }

    pub fn with(self, group: FeatureGroup) -> Self {
        GroupMask(self.0 | (1 << group.index()))
    }

    pub fn without(self, group: FeatureGroup) -> Self {
        GroupMask(self.0 & !(1 << group.index()))
    }

    pub fn contains(self, group: FeatureGroup) -> bool {
        self.0 & (1 << group.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn groups(self) -> impl Iterator<Item = FeatureGroup> {
        FeatureGroup::ALL.into_iter().filter(move |g| self.contains(*g))
    }

    /// Bit key in group order, e.g. `10100` for {Static, NWM}.
    pub fn key(self) -> String {
        FeatureGroup::ALL
            .iter()
            .map(|g| if self.contains(*g) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for GroupMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl FromStr for GroupMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('(').trim_end_matches(')');
        let bits: Vec<char> = s.chars().filter(|c| *c != ',' && !c.is_whitespace()).collect();
        if bits.len() != 5 {
            return Err(Error::Parse(format!("group mask `{s}` must have 5 bits")));
        }
        let mut mask = GroupMask::empty();
        for (g, c) in FeatureGroup::ALL.into_iter().zip(bits) {
            match c {
                '1' => mask = mask.with(g),
                '0' => {}
                _ => return Err(Error::Parse(format!("group mask `{s}` has non-binary digit"))),
            }
        }
        Ok(mask)
    }
}

/// One predictor column of the schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub group: FeatureGroup,
    pub units: String,
}

impl ColumnSpec {
    pub fn new(name: &str, group: FeatureGroup, units: &str) -> Self {
        ColumnSpec { name: name.to_string(), group, units: units.to_string() }
    }
}

/// Ordered list of predictor columns with unique names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

/// Static columns that arrive as monthly climatologies and are interpolated
/// to the day of year.
pub const MONTHLY_STATIC: [&str; 3] = ["albedo_clim", "green_fraction_clim", "leaf_area_index_clim"];

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if c.name == TARGET || c.name == "site_id" || c.name == "timestamp" {
                return Err(Error::Schema(format!("reserved column name `{}`", c.name)));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{}`", c.name)));
            }
        }
        Ok(Schema { columns })
    }

    /// The 49-predictor layout: 14 static, 20 HRRR, 2 NWM, 12 VIIRS
    /// reflectance bands and LST.
    pub fn default_fmc() -> Self {
        use FeatureGroup::*;
        let spec = [
            ("canopy_fraction", Static, "fraction"),
            ("soil_clay_fraction", Static, "fraction"),
            ("urban_fraction", Static, "fraction"),
            ("elevation", Static, "m"),
            ("impermeability", Static, "fraction"),
            ("irrigation", Static, "fraction"),
            ("land_use", Static, "category"),
            ("soil_sand_fraction", Static, "fraction"),
            ("lowest_soil_category", Static, "category"),
            ("top_soil_category", Static, "category"),
            ("snow_albedo", Static, "fraction"),
            ("albedo_clim", Static, "fraction"),
            ("green_fraction_clim", Static, "fraction"),
            ("leaf_area_index_clim", Static, "m2 m-2"),
            ("t2m", Hrrr, "K"),
            ("rh2m", Hrrr, "%"),
            ("soil_moisture_availability", Hrrr, "%"),
            ("skin_temperature", Hrrr, "K"),
            ("mslp", Hrrr, "hPa"),
            ("canopy_water", Hrrr, "kg m-2"),
            ("snow_cover", Hrrr, "%"),
            ("snow_depth", Hrrr, "m"),
            ("dewpoint2m", Hrrr, "K"),
            ("specific_humidity2m", Hrrr, "g kg-1"),
            ("potential_temperature2m", Hrrr, "K"),
            ("cloud_cover", Hrrr, "%"),
            ("snow_water_equivalent", Hrrr, "kg m-2"),
            ("ghi", Hrrr, "W m-2"),
            ("sensible_heat", Hrrr, "W m-2"),
            ("latent_heat", Hrrr, "W m-2"),
            ("ground_heat", Hrrr, "W m-2"),
            ("precipitable_water", Hrrr, "kg m-2"),
            ("precipitation", Hrrr, "kg m-2"),
            ("precipitation_rate", Hrrr, "mm h-1"),
            ("nwm_soil_moisture", Nwm, "m3 m-3"),
            ("nwm_evapotranspiration", Nwm, "mm h-1"),
            ("rfl_m1", ViirsRefl, "reflectance"),
            ("rfl_m2", ViirsRefl, "reflectance"),
            ("rfl_m3", ViirsRefl, "reflectance"),
            ("rfl_m4", ViirsRefl, "reflectance"),
            ("rfl_m5", ViirsRefl, "reflectance"),
            ("rfl_m7", ViirsRefl, "reflectance"),
            ("rfl_m8", ViirsRefl, "reflectance"),
            ("rfl_m10", ViirsRefl, "reflectance"),
            ("rfl_m11", ViirsRefl, "reflectance"),
            ("rfl_i1", ViirsRefl, "reflectance"),
            ("rfl_i2", ViirsRefl, "reflectance"),
            ("rfl_i3", ViirsRefl, "reflectance"),
            ("lst", Lst, "K"),
        ];
        let columns = spec.iter().map(|(n, g, u)| ColumnSpec::new(n, *g, u)).collect();
        Schema::new(columns).expect("default schema is valid")
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn count_in(&self, group: FeatureGroup) -> usize {
        self.columns.iter().filter(|c| c.group == group).count()
    }

    /// Hex SHA-256 of the ordered column names; stored with trained models.
    pub fn hash(&self) -> String {
        schema_hash(&self.names())
    }

    pub fn write_manifest<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_manifest<R: Read>(r: R) -> Result<Self> {
        let raw: Schema = serde_json::from_reader(r)?;
        Schema::new(raw.columns)
    }
}

pub fn schema_hash(names: &[&str]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

/// A column of reals where each cell is either present or absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    values: Vec<f64>,
    present: Vec<bool>,
}

impl Column {
    pub fn from_options<I: IntoIterator<Item = Option<f64>>>(cells: I) -> Self {
        let (values, present) = cells
            .into_iter()
            .map(|c| match c {
                Some(v) if v.is_finite() => (v, true),
                _ => (0.0, false),
            })
            .unzip();
        Column { values, present }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Column::from_options(values.into_iter().map(Some))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize) -> Option<f64> {
        if self.present[row] {
            Some(self.values[row])
        } else {
            None
        }
    }

    #[inline]
    pub fn is_present(&self, row: usize) -> bool {
        self.present[row]
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    pub fn present_values(&self) -> Vec<f64> {
        self.iter().flatten().collect()
    }

    pub fn count_present(&self) -> usize {
        self.present.iter().filter(|p| **p).count()
    }

    fn take(&self, rows: &[usize]) -> Column {
        Column {
            values: rows.iter().map(|&r| self.values[r]).collect(),
            present: rows.iter().map(|&r| self.present[r]).collect(),
        }
    }

    fn map_present(&self, f: impl Fn(f64) -> f64) -> Column {
        Column::from_options(self.iter().map(|c| c.map(&f)))
    }
}

/// Immutable table of (site, timestamp, predictors, fmc) rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    site_ids: Vec<Arc<str>>,
    timestamps: Vec<DateTime<Utc>>,
    columns: Vec<Column>,
    fmc: Column,
}

impl Dataset {
    pub fn new(
        schema: Schema,
        site_ids: Vec<Arc<str>>,
        timestamps: Vec<DateTime<Utc>>,
        columns: Vec<Column>,
        fmc: Column,
    ) -> Result<Self> {
        let n = site_ids.len();
        if columns.len() != schema.len() {
            return Err(Error::Schema(format!(
                "{} columns supplied for a schema of {}",
                columns.len(),
                schema.len()
            )));
        }
        if timestamps.len() != n || fmc.len() != n || columns.iter().any(|c| c.len() != n) {
            return Err(Error::Schema("column lengths differ".into()));
        }
        Ok(Dataset { schema, site_ids, timestamps, columns, fmc })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.site_ids.len()
    }

    pub fn n_predictors(&self) -> usize {
        self.schema.len()
    }

    pub fn site_id(&self, row: usize) -> &str {
        &self.site_ids[row]
    }

    pub fn site_ids(&self) -> &[Arc<str>] {
        &self.site_ids
    }

    pub fn timestamp(&self, row: usize) -> DateTime<Utc> {
        self.timestamps[row]
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn column(&self, idx: usize) -> &Column {
        &self.columns[idx]
    }

    pub fn column_by_name(&self, name: &str) -> Option<&Column> {
        if name == TARGET {
            return Some(&self.fmc);
        }
        self.schema.position(name).map(|i| &self.columns[i])
    }

    pub fn fmc(&self) -> &Column {
        &self.fmc
    }

    /// Sorted distinct site identifiers.
    pub fn distinct_sites(&self) -> Vec<Arc<str>> {
        let mut s: Vec<Arc<str>> = self.site_ids.to_vec();
        s.sort();
        s.dedup();
        s
    }

    /// New dataset holding the given rows in the given order.
    pub fn take_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            site_ids: rows.iter().map(|&r| self.site_ids[r].clone()).collect(),
            timestamps: rows.iter().map(|&r| self.timestamps[r]).collect(),
            columns: self.columns.iter().map(|c| c.take(rows)).collect(),
            fmc: self.fmc.take(rows),
        }
    }

    /// Rows with `timestamp >= start`, or all rows when `start` is `None`.
    pub fn since(&self, start: Option<DateTime<Utc>>) -> Dataset {
        match start {
            None => self.clone(),
            Some(t) => {
                let rows: Vec<usize> = (0..self.n_rows()).filter(|&r| self.timestamps[r] >= t).collect();
                self.take_rows(&rows)
            }
        }
    }

    /// Row-major predictor matrix for `rows` (all rows when `None`).
    /// Fails if any requested cell is absent.
    pub fn feature_matrix(&self, rows: Option<&[usize]>) -> Result<Array2<f64>> {
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..self.n_rows()).collect();
                &all
            }
        };
        let p = self.n_predictors();
        let mut m = Array2::zeros((rows.len(), p));
        for (j, col) in self.columns.iter().enumerate() {
            for (i, &r) in rows.iter().enumerate() {
                m[[i, j]] = col.get(r).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "missing value in column `{}` at row {r}",
                        self.schema.columns[j].name
                    ))
                })?;
            }
        }
        Ok(m)
    }

    /// Target values for `rows`; fails on absent targets.
    pub fn target_vector(&self, rows: Option<&[usize]>) -> Result<Vec<f64>> {
        let get = |r: usize| {
            self.fmc
                .get(r)
                .ok_or_else(|| Error::InvalidArgument(format!("missing fmc at row {r}")))
        };
        match rows {
            Some(rows) => rows.iter().map(|&r| get(r)).collect(),
            None => (0..self.n_rows()).map(get).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["site_id", "timestamp"];
        header.extend(self.schema.names());
        header.push(TARGET);
        wr.write_record(&header)?;
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for r in 0..self.n_rows() {
            rec.clear();
            rec.push(self.site_ids[r].to_string());
            rec.push(format_timestamp(self.timestamps[r]));
            for c in &self.columns {
                rec.push(format_cell(c.get(r)));
            }
            rec.push(format_cell(self.fmc.get(r)));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the table layout written by [`Dataset::write_csv`]. Columns are
    /// matched to `schema` by header name.
    pub fn read_csv<R: Read>(r: R, schema: &Schema) -> Result<Dataset> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        let idx = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema(format!("column `{name}` missing from CSV header")))
        };
        let site_i = idx("site_id")?;
        let ts_i = idx("timestamp")?;
        let fmc_i = idx(TARGET)?;
        let col_i: Vec<usize> = schema.names().iter().map(|n| idx(n)).collect::<Result<_>>()?;
        if headers.len() != schema.len() + 3 {
            return Err(Error::Schema(format!(
                "CSV has {} columns, schema expects {}",
                headers.len(),
                schema.len() + 3
            )));
        }
        let mut site_ids = Vec::new();
        let mut timestamps = Vec::new();
        let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); schema.len()];
        let mut fmc = Vec::new();
        let mut interner = SiteInterner::default();
        for rec in rd.records() {
            let rec = rec?;
            site_ids.push(interner.intern(&rec[site_i]));
            timestamps.push(parse_timestamp(&rec[ts_i])?);
            for (j, &ci) in col_i.iter().enumerate() {
                cells[j].push(parse_cell(&rec[ci])?);
            }
            fmc.push(parse_cell(&rec[fmc_i])?);
        }
        Dataset::new(
            schema.clone(),
            site_ids,
            timestamps,
            cells.into_iter().map(Column::from_options).collect(),
            Column::from_options(fmc),
        )
    }
}

/// Deduplicates site-id allocations while reading large tables.
#[derive(Default)]
pub struct SiteInterner {
    map: std::collections::HashMap<String, Arc<str>>,
}

impl SiteInterner {
    pub fn intern(&mut self, s: &str) -> Arc<str> {
        if let Some(a) = self.map.get(s) {
            return a.clone();
        }
        let a: Arc<str> = Arc::from(s);
        self.map.insert(s.to_string(), a.clone());
        a
    }
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| Error::Parse(format!("timestamp `{s}`: {e}")))
}

pub fn format_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

pub fn parse_cell(s: &str) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| Error::Parse(format!("number `{s}`")))?;
    Ok(if v.is_finite() { Some(v) } else { None })
}

/// Keeps only predictors whose group is in `mask` and drops every row with an
/// absent retained predictor or absent fmc.
pub fn select_groups(ds: &Dataset, mask: GroupMask) -> Result<Dataset> {
    if mask.is_empty() {
        return Err(Error::InvalidArgument("group mask is empty".into()));
    }
    let keep: Vec<usize> = (0..ds.n_predictors())
        .filter(|&j| mask.contains(ds.schema.columns[j].group))
        .collect();
    let rows: Vec<usize> = (0..ds.n_rows())
        .filter(|&r| ds.fmc.is_present(r) && keep.iter().all(|&j| ds.columns[j].is_present(r)))
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let schema = Schema::new(keep.iter().map(|&j| ds.schema.columns[j].clone()).collect())?;
    Ok(Dataset {
        schema,
        site_ids: rows.iter().map(|&r| ds.site_ids[r].clone()).collect(),
        timestamps: rows.iter().map(|&r| ds.timestamps[r]).collect(),
        columns: keep.iter().map(|&j| ds.columns[j].take(&rows)).collect(),
        fmc: ds.fmc.take(&rows),
    })
}

/// Mean and population standard deviation of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

impl ColumnStats {
    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    #[inline]
    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StandardizerParams {
    pub columns: Vec<ColumnStats>,
}

impl StandardizerParams {
    pub fn get(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&ColumnStats> {
        self.get(name).ok_or_else(|| Error::MissingParams(name.to_string()))
    }

    /// Standardizes a feature matrix whose columns are `names`, in place.
    pub fn transform_matrix(&self, x: &mut Array2<f64>, names: &[&str]) -> Result<()> {
        for (j, name) in names.iter().enumerate() {
            let st = self.require(name)?;
            x.column_mut(j).mapv_inplace(|v| st.forward(v));
        }
        Ok(())
    }
}

/// Computes population mean and standard deviation of present values in a
/// column.
pub fn column_stats(name: &str, values: &[f64]) -> Result<ColumnStats> {
    if values.len() < 2 {
        return Err(Error::DegenerateColumn {
            column: name.to_string(),
            reason: format!("{} finite values, need at least 2", values.len()),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::DegenerateColumn { column: name.to_string(), reason: "zero spread".into() });
    }
    Ok(ColumnStats { name: name.to_string(), mean, std })
}

/// Fits z-score parameters on the present values of each named column
/// (predictor names or [`TARGET`]).
pub fn fit_standardizer(ds: &Dataset, columns: &[&str]) -> Result<StandardizerParams> {
    let stats = columns
        .iter()
        .map(|name| {
            let col = ds
                .column_by_name(name)
                .ok_or_else(|| Error::Schema(format!("unknown column `{name}`")))?;
            column_stats(name, &col.present_values())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StandardizerParams { columns: stats })
}

/// Standardizes every predictor column; the target is transformed too when
/// `params` carries an entry for it.
pub fn standardize(ds: &Dataset, params: &StandardizerParams) -> Result<Dataset> {
    let columns = ds
        .schema
        .columns
        .iter()
        .zip(&ds.columns)
        .map(|(spec, col)| {
            let st = params.require(&spec.name)?;
            Ok(col.map_present(|v| st.forward(v)))
        })
        .collect::<Result<Vec<_>>>()?;
    let fmc = match params.get(TARGET) {
        Some(st) => ds.fmc.map_present(|v| st.forward(v)),
        None => ds.fmc.clone(),
    };
    Ok(Dataset {
        schema: ds.schema.clone(),
        site_ids: ds.site_ids.clone(),
        timestamps: ds.timestamps.clone(),
        columns,
        fmc,
    })
}

pub fn inverse_standardize(values: &[f64], params: &StandardizerParams, column: &str) -> Result<Vec<f64>> {
    let st = params.require(column)?;
    Ok(values.iter().map(|&z| st.inverse(z)).collect())
}
