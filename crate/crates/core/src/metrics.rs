//! RMSE, R², climatology skill scores, grouped aggregation and the predictor
//! correlation matrix.

use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::str::FromStr;

use chrono::{Datelike, Timelike};

use crate::climatology::{ClimatologyKind, ClimatologyTable};
use crate::error::{Error, Result};
use crate::split::SplitAssignment;
use crate::tabular::{Dataset, TARGET};

fn check_lengths(y: &[f64], f: &[f64]) -> Result<()> {
    if y.len() != f.len() {
        return Err(Error::Alignment(format!("{} targets vs {} predictions", y.len(), f.len())));
    }
    Ok(())
}

/// Root-mean-square error.
pub fn rmse(y: &[f64], f: &[f64]) -> Result<f64> {
    check_lengths(y, f)?;
    if y.is_empty() {
        return Err(Error::InvalidArgument("rmse of zero rows".into()));
    }
    let ss: f64 = y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / y.len() as f64).sqrt())
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r2(y: &[f64], f: &[f64]) -> Result<f64> {
    check_lengths(y, f)?;
    if y.len() < 2 {
        return Err(Error::InvalidArgument("r2 needs at least two rows".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    if !(ss_tot > 0.0) {
        return Err(Error::UndefinedR2);
    }
    let ss_res: f64 = y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub rmse: f64,
    /// `None` for fewer than two rows or constant targets.
    pub r2: Option<f64>,
    pub n: usize,
    pub y_mean: f64,
    pub ss_res: f64,
    /// Fingerprint of the evaluated row indices, when known.
    pub rows_digest: Option<u64>,
}

impl MetricReport {
    pub fn compute(y: &[f64], f: &[f64]) -> Result<Self> {
        let e = rmse(y, f)?;
        let r = match r2(y, f) {
            Ok(v) => Some(v),
            Err(Error::UndefinedR2) | Err(Error::InvalidArgument(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(MetricReport {
            rmse: e,
            r2: r,
            n: y.len(),
            y_mean: y.iter().sum::<f64>() / y.len() as f64,
            ss_res: e * e * y.len() as f64,
            rows_digest: None,
        })
    }

    /// Like [`MetricReport::compute`], tagging the report with the row set so
    /// that [`skill`] can verify alignment.
    pub fn on_rows(y: &[f64], f: &[f64], rows: &[usize]) -> Result<Self> {
        let mut m = MetricReport::compute(y, f)?;
        if rows.len() != y.len() {
            return Err(Error::Alignment("row index list does not match values".into()));
        }
        let mut h = std::collections::hash_map::DefaultHasher::new();
        rows.hash(&mut h);
        m.rows_digest = Some(h.finish());
        Ok(m)
    }

    /// R² clipped at zero for display tables.
    pub fn r2_display(&self) -> Option<f64> {
        self.r2.map(|v| v.max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkillReport {
    pub skill_rmse: f64,
    /// `None` when either R² is undefined.
    pub skill_r2: Option<f64>,
    pub baseline_kind: ClimatologyKind,
    pub n: usize,
}

/// Skill of a model relative to a climatology evaluated on the same rows:
/// `1 - RMSE(ML)/RMSE(Clim)` and `(R²(ML) - R²(Clim)) / (1 - R²(Clim))`.
pub fn skill(model: &MetricReport, clim: &MetricReport, kind: ClimatologyKind) -> Result<SkillReport> {
    if model.n != clim.n {
        return Err(Error::Alignment(format!("model scored on {} rows, climatology on {}", model.n, clim.n)));
    }
    if let (Some(a), Some(b)) = (model.rows_digest, clim.rows_digest) {
        if a != b {
            return Err(Error::Alignment("model and climatology scored on different rows".into()));
        }
    }
    if !(clim.rmse > 0.0) {
        return Err(Error::InvalidArgument("climatology RMSE is zero".into()));
    }
    let skill_r2 = match (model.r2, clim.r2) {
        (Some(m), Some(c)) if c < 1.0 => Some((m - c) / (1.0 - c)),
        _ => None,
    };
    Ok(SkillReport { skill_rmse: 1.0 - model.rmse / clim.rmse, skill_r2, baseline_kind: kind, n: model.n })
}

/// Scores model and climatology on the rows where the climatology is
/// present. Returns `None` when fewer than one such row exists.
pub fn skill_on_unmasked(
    y: &[f64],
    model: &[f64],
    clim: &[Option<f64>],
    kind: ClimatologyKind,
) -> Result<Option<(MetricReport, MetricReport, SkillReport)>> {
    check_lengths(y, model)?;
    if clim.len() != y.len() {
        return Err(Error::Alignment("climatology predictions misaligned".into()));
    }
    let rows: Vec<usize> = (0..y.len()).filter(|&i| clim[i].is_some()).collect();
    if rows.is_empty() {
        return Ok(None);
    }
    let ys: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
    let ms: Vec<f64> = rows.iter().map(|&i| model[i]).collect();
    let cs: Vec<f64> = rows.iter().map(|&i| clim[i].expect("filtered")).collect();
    let m = MetricReport::on_rows(&ys, &ms, &rows)?;
    let c = MetricReport::on_rows(&ys, &cs, &rows)?;
    if !(c.rmse > 0.0) {
        return Ok(None);
    }
    let s = skill(&m, &c, kind)?;
    Ok(Some((m, c, s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Site,
    Month,
    Hour,
    Label,
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Site => "site",
            GroupKey::Month => "month",
            GroupKey::Hour => "hour",
            GroupKey::Label => "label",
        }
    }
}

impl FromStr for GroupKey {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "site" | "site_id" => Ok(GroupKey::Site),
            "month" => Ok(GroupKey::Month),
            "hour" => Ok(GroupKey::Hour),
            "label" | "split" => Ok(GroupKey::Label),
            _ => Err(Error::InvalidArgument(format!("unknown group key `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub group: String,
    pub metrics: MetricReport,
    pub skills: Vec<SkillReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedMetrics {
    pub key: GroupKey,
    pub groups: Vec<GroupResult>,
}

/// Metrics and skills per site, month, hour or split label. Skill rows use
/// only the rows where the respective climatology is unmasked.
pub fn grouped_metrics(
    ds: &Dataset,
    predictions: &[f64],
    clims: &[&ClimatologyTable],
    key: GroupKey,
    labels: Option<&SplitAssignment>,
) -> Result<GroupedMetrics> {
    if predictions.len() != ds.n_rows() {
        return Err(Error::Alignment(format!("{} predictions for {} rows", predictions.len(), ds.n_rows())));
    }
    if key == GroupKey::Label && labels.map(|l| l.labels.len()) != Some(ds.n_rows()) {
        return Err(Error::InvalidArgument("grouping by label needs an aligned split assignment".into()));
    }
    let y = ds.target_vector(None)?;
    let mut buckets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for r in 0..ds.n_rows() {
        let t = ds.timestamp(r);
        let g = match key {
            GroupKey::Site => ds.site_id(r).to_string(),
            GroupKey::Month => format!("{:02}", t.month()),
            GroupKey::Hour => format!("{:02}", t.hour()),
            GroupKey::Label => labels.expect("checked").labels[r].name().to_string(),
        };
        buckets.entry(g).or_default().push(r);
    }
    let clim_preds: Vec<Vec<Option<f64>>> = clims
        .iter()
        .map(|c| (0..ds.n_rows()).map(|r| c.predict(ds.site_id(r), ds.timestamp(r))).collect())
        .collect();
    let mut groups = Vec::with_capacity(buckets.len());
    for (g, rows) in buckets {
        let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
        let fs: Vec<f64> = rows.iter().map(|&r| predictions[r]).collect();
        let metrics = MetricReport::compute(&ys, &fs)?;
        let mut skills = Vec::new();
        for (c, cp) in clims.iter().zip(&clim_preds) {
            let cs: Vec<Option<f64>> = rows.iter().map(|&r| cp[r]).collect();
            if let Some((_, _, s)) = skill_on_unmasked(&ys, &fs, &cs, c.kind())? {
                skills.push(s);
            }
        }
        groups.push(GroupResult { group: g, metrics, skills });
    }
    Ok(GroupedMetrics { key, groups })
}

impl GroupedMetrics {
    /// Tidy CSV `group_key,metric,value,n`. Both raw R² and the display
    /// value clipped at zero are emitted.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["group_key", "metric", "value", "n"])?;
        for g in &self.groups {
            let key = format!("{}={}", self.key.name(), g.group);
            let mut rows: Vec<(String, Option<f64>, usize)> = vec![
                ("rmse".into(), Some(g.metrics.rmse), g.metrics.n),
                ("r2".into(), g.metrics.r2, g.metrics.n),
                ("r2_clipped".into(), g.metrics.r2_display(), g.metrics.n),
            ];
            for s in &g.skills {
                let k = s.baseline_kind.label();
                rows.push((format!("skill_rmse_{k}"), Some(s.skill_rmse), s.n));
                rows.push((format!("skill_r2_{k}"), s.skill_r2, s.n));
            }
            for (metric, value, n) in rows {
                wr.write_record([key.clone(), metric, value.map(|v| v.to_string()).unwrap_or_default(), n.to_string()])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Pearson correlations among predictors and the target.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// `None` where either column is constant over the complete rows.
    pub values: Vec<Vec<Option<f64>>>,
    pub n_rows: usize,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa > 0.0 && sbb > 0.0 {
        Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
    } else {
        None
    }
}

/// Correlations over the rows where every predictor and the target are
/// present.
pub fn correlation_matrix(ds: &Dataset) -> Result<CorrelationMatrix> {
    let mut names: Vec<String> = ds.schema().names().iter().map(|s| s.to_string()).collect();
    names.push(TARGET.to_string());
    let cols: Vec<_> = (0..ds.n_predictors()).map(|j| ds.column(j)).chain(std::iter::once(ds.fmc())).collect();
    let rows: Vec<usize> = (0..ds.n_rows()).filter(|&r| cols.iter().all(|c| c.is_present(r))).collect();
    if rows.len() < 2 {
        return Err(Error::TooSmall(format!("{} complete rows; correlation needs 2", rows.len())));
    }
    let data: Vec<Vec<f64>> = cols.iter().map(|c| rows.iter().map(|&r| c.get(r).expect("complete")).collect()).collect();
    let p = data.len();
    let mut values = vec![vec![None; p]; p];
    for i in 0..p {
        for j in i..p {
            let v = pearson(&data[i], &data[j]);
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(CorrelationMatrix { names, values, n_rows: rows.len() })
}

impl CorrelationMatrix {
    /// Long-form CSV `row,col,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["row", "col", "value"])?;
        for (i, a) in self.names.iter().enumerate() {
            for (j, b) in self.names.iter().enumerate() {
                wr.write_record([a.as_str(), b.as_str(), &self.values[i][j].map(|v| v.to_string()).unwrap_or_default()])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Column, ColumnSpec, FeatureGroup, Schema};
    use chrono::{TimeZone, Utc};
    use std::sync::Arc;

    #[test]
    fn metric_examples() {
        let y = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
        let m = y.iter().sum::<f64>() / 4.0;
        assert!(r2(&y, &[m; 4]).unwrap().abs() < 1e-15);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 3.5355).abs() < 1e-4);
        assert!(matches!(r2(&[2.0, 2.0], &[1.0, 3.0]), Err(Error::UndefinedR2)));
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(Error::Alignment(_))));
    }

    fn rep(rmse: f64, r2: f64) -> MetricReport {
        MetricReport { rmse, r2: Some(r2), n: 10, y_mean: 0.0, ss_res: 0.0, rows_digest: None }
    }

    #[test]
    fn skill_examples() {
        let s = skill(&rep(2.0, 0.5), &rep(4.0, 0.2), ClimatologyKind::Doy).unwrap();
        assert_eq!(s.skill_rmse, 0.5);
        let s = skill(&rep(3.0, 0.4), &rep(3.0, 0.4), ClimatologyKind::Doy).unwrap();
        assert_eq!((s.skill_rmse, s.skill_r2), (0.0, Some(0.0)));
        let s = skill(&rep(0.0, 1.0), &rep(3.0, 0.4), ClimatologyKind::DoyHr).unwrap();
        assert_eq!(s.skill_r2, Some(1.0));
        let mut other = rep(3.0, 0.4);
        other.n = 9;
        assert!(matches!(skill(&rep(1.0, 0.5), &other, ClimatologyKind::Doy), Err(Error::Alignment(_))));
    }

    #[test]
    fn skill_on_unmasked_rows_checks_digest() {
        let y = [1.0, 2.0, 3.0, 4.0];
        let f = [1.1, 2.1, 2.9, 4.2];
        let c = [Some(2.0), None, Some(2.5), Some(3.0)];
        let (m, cl, s) = skill_on_unmasked(&y, &f, &c, ClimatologyKind::Doy).unwrap().unwrap();
        assert_eq!(m.n, 3);
        assert_eq!(m.rows_digest, cl.rows_digest);
        assert!(s.skill_rmse > 0.0);
        let a = MetricReport::on_rows(&[1.0, 2.0], &[1.0, 2.0], &[0, 1]).unwrap();
        let b = MetricReport::on_rows(&[1.0, 2.0], &[2.0, 2.0], &[0, 2]).unwrap();
        assert!(matches!(skill(&a, &b, ClimatologyKind::Doy), Err(Error::Alignment(_))));
    }

    fn month_fixture() -> (Dataset, Vec<f64>) {
        let t = |m| Utc.with_ymd_and_hms(2020, m, 3, 0, 0, 0).unwrap();
        let ts = vec![t(1), t(1), t(1), t(7), t(7), t(7)];
        let y = vec![1.0, 5.0, 3.0, 10.0, 12.0, 8.0];
        let ds = Dataset::new(
            Schema::new(vec![ColumnSpec::new("x", FeatureGroup::Hrrr, "")]).unwrap(),
            vec![Arc::from("A"); 6],
            ts,
            vec![Column::from_values(vec![0.0; 6])],
            Column::from_values(y),
        )
        .unwrap();
        (ds, vec![2.0, 4.0, 3.0, 11.0, 9.0, 8.0])
    }

    #[test]
    fn grouped_by_month_matches_subsets() {
        let (ds, f) = month_fixture();
        let g = grouped_metrics(&ds, &f, &[], GroupKey::Month, None).unwrap();
        assert_eq!(g.groups.len(), 2);
        let y = ds.target_vector(None).unwrap();
        let direct = MetricReport::compute(&y[..3], &f[..3]).unwrap();
        assert_eq!(g.groups[0].metrics, direct);
        let pooled: f64 = g.groups.iter().map(|x| x.metrics.ss_res).sum();
        let global = MetricReport::compute(&y, &f).unwrap();
        assert!((pooled - global.ss_res).abs() < 1e-12);
        let site = grouped_metrics(&ds, &f, &[], GroupKey::Site, None).unwrap();
        assert_eq!(site.groups.len(), 1);
        assert_eq!(site.groups[0].metrics, global);
        assert!(grouped_metrics(&ds, &f, &[], GroupKey::Label, None).is_err());
        assert!("district".parse::<GroupKey>().is_err());
    }

    #[test]
    fn negative_r2_kept_raw_and_clipped_on_emission() {
        let (ds, _) = month_fixture();
        let bad = vec![10.0, -5.0, 20.0, 0.0, 30.0, -8.0];
        let g = grouped_metrics(&ds, &bad, &[], GroupKey::Site, None).unwrap();
        assert!(g.groups[0].metrics.r2.unwrap() < 0.0);
        assert_eq!(g.groups[0].metrics.r2_display(), Some(0.0));
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("site=A,r2_clipped,0,6"));
    }

    #[test]
    fn correlation_basics() {
        let n = 20;
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let ds = Dataset::new(
            Schema::new(vec![
                ColumnSpec::new("x", FeatureGroup::Hrrr, ""),
                ColumnSpec::new("c", FeatureGroup::Static, ""),
            ])
            .unwrap(),
            vec![Arc::from("A"); n],
            (0..n).map(|i| Utc.with_ymd_and_hms(2020, 1, 1, i as u32, 0, 0).unwrap()).collect(),
            vec![Column::from_values(x.clone()), Column::from_values(vec![1.0; n])],
            Column::from_values(x.iter().map(|v| -v).collect()),
        )
        .unwrap();
        let c = correlation_matrix(&ds).unwrap();
        assert!((c.values[0][0].unwrap() - 1.0).abs() < 1e-15);
        assert!((c.values[0][2].unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(c.values[1][0], None);
    }
}
