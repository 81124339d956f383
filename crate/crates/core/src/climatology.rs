//! Day-of-year (DOY) and day-of-year-and-hour (DOY-HR) climatographies used
//! as baseline predictors for skill scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::{DateTime, Datelike, NaiveDate, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{assign_nearest_hour, FmcObservation};

/// Half-width of the pooling window in days.
pub const WINDOW_HALF_WIDTH: u32 = 15;
/// Minimum number of distinct contributing years for an unmasked entry.
pub const MIN_YEARS: usize = 6;

/// Day of year on a 365-day calendar: Feb 29 shares Feb 28's index and later
/// days of a leap year shift down by one.
pub fn day_of_year(date: NaiveDate) -> u32 {
    let ord = date.ordinal();
    if date.leap_year() && ord >= 60 {
        ord - 1
    } else {
        ord
    }
}

/// The 31 days centered on `doy`, wrapping across the year end, ordered from
/// 15 days before to 15 days after.
pub fn window_days(doy: u32) -> Result<Vec<u32>> {
    if !(1..=365).contains(&doy) {
        return Err(Error::InvalidArgument(format!("day of year {doy} outside 1..=365")));
    }
    let w = WINDOW_HALF_WIDTH as i64;
    Ok((-w..=w).map(|k| ((doy as i64 - 1 + k).rem_euclid(365) + 1) as u32).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClimatologyKind {
    #[serde(rename = "DOY")]
    Doy,
    #[serde(rename = "DOY_HR")]
    DoyHr,
}

impl ClimatologyKind {
    pub fn label(self) -> &'static str {
        match self {
            ClimatologyKind::Doy => "DOY",
            ClimatologyKind::DoyHr => "DOY_HR",
        }
    }
}

/// Pooled statistics for one (site, doy[, hour]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClimEntry {
    /// `None` when fewer than [`MIN_YEARS`] years contributed.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub count: usize,
    pub n_years: usize,
}

/// Population mean and standard deviation, accumulated in ascending value
/// order so the result depends only on the multiset of values.
pub fn pooled_stats(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClimatologyTable {
    kind: ClimatologyKind,
    entries: BTreeMap<(String, u32, Option<u32>), ClimEntry>,
}

impl ClimatologyTable {
    pub fn kind(&self) -> ClimatologyKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, site: &str, doy: u32, hour: Option<u32>) -> Option<&ClimEntry> {
        let hour = match self.kind {
            ClimatologyKind::Doy => None,
            ClimatologyKind::DoyHr => hour,
        };
        self.entries.get(&(site.to_string(), doy, hour))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(String, u32, Option<u32>), &ClimEntry)> {
        self.entries.iter()
    }

    /// Baseline mean for the hour nearest `timestamp`; absent when masked or
    /// the site is unknown.
    pub fn predict(&self, site: &str, timestamp: DateTime<Utc>) -> Option<f64> {
        let t = assign_nearest_hour(timestamp);
        let doy = day_of_year(t.date_naive());
        self.entry(site, doy, Some(t.hour())).and_then(|e| e.mean)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        match self.kind {
            ClimatologyKind::Doy => wr.write_record(["site_id", "doy", "mean", "std", "count", "n_years"])?,
            ClimatologyKind::DoyHr => wr.write_record(["site_id", "doy", "hour", "mean", "std", "count", "n_years"])?,
        }
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for ((site, doy, hour), e) in &self.entries {
            let mut rec = vec![site.clone(), doy.to_string()];
            if let Some(h) = hour {
                rec.push(h.to_string());
            }
            rec.extend([opt(e.mean), opt(e.std), e.count.to_string(), e.n_years.to_string()]);
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let kind = if rd.headers()?.iter().any(|h| h == "hour") { ClimatologyKind::DoyHr } else { ClimatologyKind::Doy };
        let mut entries = BTreeMap::new();
        let pnum = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| Error::Parse(format!("number `{s}`")))
            }
        };
        let pint = |s: &str| -> Result<u64> { s.parse().map_err(|_| Error::Parse(format!("integer `{s}`"))) };
        for rec in rd.records() {
            let rec = rec?;
            let (hour, off) = match kind {
                ClimatologyKind::Doy => (None, 2),
                ClimatologyKind::DoyHr => (Some(pint(&rec[2])? as u32), 3),
            };
            entries.insert(
                (rec[0].to_string(), pint(&rec[1])? as u32, hour),
                ClimEntry {
                    mean: pnum(&rec[off])?,
                    std: pnum(&rec[off + 1])?,
                    count: pint(&rec[off + 2])? as usize,
                    n_years: pint(&rec[off + 3])? as usize,
                },
            );
        }
        Ok(ClimatologyTable { kind, entries })
    }
}

/// Pools every site's observations over the 31-day window around each day
/// of year (and, for DOY-HR, the same hour) across all years.
pub fn build_climatology(obs: &[FmcObservation], kind: ClimatologyKind) -> Result<ClimatologyTable> {
    // site -> doy -> hour -> (year, value) in input order
    type Buckets = Vec<[Vec<(i32, f64)>; 24]>;
    let mut per_site: BTreeMap<&str, Buckets> = BTreeMap::new();
    let mut any = false;
    for o in obs.iter().filter(|o| o.qc_pass) {
        any = true;
        let t = assign_nearest_hour(o.timestamp);
        let doy = day_of_year(t.date_naive()) as usize;
        let b = per_site
            .entry(o.site_id.as_str())
            .or_insert_with(|| (0..=365).map(|_| std::array::from_fn(|_| Vec::new())).collect());
        b[doy][t.hour() as usize].push((t.year(), o.fmc));
    }
    if !any {
        return Err(Error::InvalidArgument("no QC-passing observations to build a climatology".into()));
    }

    let hours: Vec<Option<u32>> = match kind {
        ClimatologyKind::Doy => vec![None],
        ClimatologyKind::DoyHr => (0..24).map(Some).collect(),
    };
    let mut entries = BTreeMap::new();
    let mut pool: Vec<f64> = Vec::new();
    let mut years: BTreeSet<i32> = BTreeSet::new();
    for (site, buckets) in &per_site {
        for doy in 1..=365u32 {
            let window = window_days(doy)?;
            for &hour in &hours {
                pool.clear();
                years.clear();
                for &d in &window {
                    let slots: &[Vec<(i32, f64)>] = match hour {
                        None => &buckets[d as usize][..],
                        Some(h) => std::slice::from_ref(&buckets[d as usize][h as usize]),
                    };
                    for (y, v) in slots.iter().flatten() {
                        pool.push(*v);
                        years.insert(*y);
                    }
                }
                if pool.is_empty() {
                    continue;
                }
                let (mean, std) = pooled_stats(&mut pool);
                let ok = years.len() >= MIN_YEARS;
                entries.insert(
                    (site.to_string(), doy, hour),
                    ClimEntry {
                        mean: ok.then_some(mean),
                        std: ok.then_some(std),
                        count: pool.len(),
                        n_years: years.len(),
                    },
                );
            }
        }
    }
    Ok(ClimatologyTable { kind, entries })
}
