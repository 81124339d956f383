//! Stratified random and site-holdout train/validation/test partitioning, and
//! k-fold resampling of the train/validation pool around a fixed test set.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::Dataset;

/// Number of equal-frequency FMC bins used for stratification.
pub const N_STRATA: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Train,
    Val,
    Test,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Train, Label::Val, Label::Test];

    pub fn name(self) -> &'static str {
        match self {
            Label::Train => "train",
            Label::Val => "val",
            Label::Test => "test",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown split label `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitStrategy {
    Random,
    Site,
}

impl FromStr for SplitStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SplitStrategy::Random),
            "site" => Ok(SplitStrategy::Site),
            _ => Err(Error::Parse(format!("unknown split strategy `{s}`"))),
        }
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitStrategy::Random => "random",
            SplitStrategy::Site => "site",
        })
    }
}

/// Target train/validation/test fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for Fractions {
    fn default() -> Self {
        Fractions { train: 0.8, val: 0.1, test: 0.1 }
    }
}

impl Fractions {
    fn validate(&self) -> Result<[f64; 3]> {
        let f = [self.train, self.val, self.test];
        if f.iter().any(|x| !(*x > 0.0) || !x.is_finite()) || ((f[0] + f[1] + f[2]) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("split fractions {f:?} must be positive and sum to 1")));
        }
        Ok(f)
    }
}

/// Per-row label of a train/validation/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub labels: Vec<Label>,
    pub strategy: SplitStrategy,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn rows(&self, label: Label) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, l)| **l == label).map(|(i, _)| i).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}

/// One resampled train/validation partition of the non-test pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Fixed test rows and `k` train/validation resamplings of the rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSet {
    pub test: Vec<usize>,
    pub folds: Vec<Fold>,
    pub strategy: SplitStrategy,
    pub seed: u64,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Assigns `rows` to labels with target fractions inside each of
/// [`N_STRATA`] equal-frequency bins of `values`.
fn stratified_rows(rows: &[usize], values: &[f64], fracs: &[f64], rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = rows.to_vec();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let n = order.len();
    let mut out = Vec::with_capacity(n);
    for b in 0..N_STRATA {
        let mut bin: Vec<usize> = order[b * n / N_STRATA..(b + 1) * n / N_STRATA].to_vec();
        bin.shuffle(rng);
        let m = bin.len();
        let mut bounds = Vec::with_capacity(fracs.len());
        let mut acc = 0.0;
        for f in &fracs[..fracs.len() - 1] {
            acc += f;
            bounds.push(((acc * m as f64).round() as usize).min(m));
        }
        bounds.push(m);
        let mut label = 0;
        for (i, r) in bin.into_iter().enumerate() {
            while i >= bounds[label] {
                label += 1;
            }
            out.push((r, label));
        }
    }
    out
}

/// Row-level split stratified on FMC deciles.
pub fn stratified_random_split(ds: &Dataset, fracs: Fractions, seed: u64) -> Result<SplitAssignment> {
    let f = fracs.validate()?;
    let n = ds.n_rows();
    if n < N_STRATA {
        return Err(Error::TooSmall(format!("{n} rows cannot fill {N_STRATA} strata")));
    }
    let y = ds.target_vector(None)?;
    let rows: Vec<usize> = (0..n).collect();
    let mut labels = vec![Label::Train; n];
    for (r, l) in stratified_rows(&rows, &y, &f, &mut rng_for(seed, 0)) {
        labels[r] = Label::ALL[l];
    }
    Ok(SplitAssignment { labels, strategy: SplitStrategy::Random, seed })
}

struct SiteInfo {
    rows: Vec<usize>,
    median: f64,
    id: Arc<str>,
}

fn site_infos(ds: &Dataset, rows: &[usize], y: &[f64]) -> Vec<SiteInfo> {
    let mut by_site: HashMap<Arc<str>, Vec<usize>> = HashMap::new();
    for &r in rows {
        by_site.entry(ds.site_ids()[r].clone()).or_default().push(r);
    }
    let mut infos: Vec<SiteInfo> = by_site
        .into_iter()
        .map(|(id, rows)| {
            let mut v: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
            v.sort_by(|a, b| a.total_cmp(b));
            let m = v.len();
            let median = if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) };
            SiteInfo { rows, median, id }
        })
        .collect();
    infos.sort_by(|a, b| a.median.total_cmp(&b.median).then_with(|| a.id.cmp(&b.id)));
    infos
}

/// Shuffled orders [`pack_sites`] tries before settling for the closest.
const PACKING_ATTEMPTS: usize = 32;

/// Greedy packing of whole sites into labels. Sites are stratified on their
/// median FMC, shuffled within strata and interleaved across strata; each
/// in turn goes to the label furthest below its target row count, except
/// that labels still without a site are filled once the remaining sites
/// would otherwise run out. The first order whose total row-count deviation
/// from the targets is at most the largest site's size is kept, otherwise
/// the closest of [`PACKING_ATTEMPTS`] orders.
fn pack_sites(infos: &[SiteInfo], fracs: &[f64], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n_sites = infos.len();
    let n_strata = N_STRATA.min(n_sites);
    let total: usize = infos.iter().map(|s| s.rows.len()).sum();
    let targets: Vec<f64> = fracs.iter().map(|f| f * total as f64).collect();
    let tolerance = infos.iter().map(|s| s.rows.len()).max().unwrap_or(0) as f64;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..PACKING_ATTEMPTS {
        let mut strata: Vec<Vec<usize>> = (0..n_strata)
            .map(|b| (b * n_sites / n_strata..(b + 1) * n_sites / n_strata).collect())
            .collect();
        for s in &mut strata {
            s.shuffle(rng);
        }
        let mut order = Vec::with_capacity(n_sites);
        let depth = strata.iter().map(Vec::len).max().unwrap_or(0);
        for k in 0..depth {
            for s in &strata {
                if let Some(&i) = s.get(k) {
                    order.push(i);
                }
            }
        }

        let mut counts = vec![0usize; fracs.len()];
        let mut n_assigned = vec![0usize; fracs.len()];
        let mut site_label = vec![0usize; n_sites];
        for (pos, &i) in order.iter().enumerate() {
            let remaining = n_sites - pos;
            let empty: Vec<usize> = (0..fracs.len()).filter(|&l| n_assigned[l] == 0).collect();
            let candidates: Vec<usize> = if remaining <= empty.len() { empty } else { (0..fracs.len()).collect() };
            let mut pick = candidates[0];
            for &l in &candidates[1..] {
                if targets[l] - counts[l] as f64 > targets[pick] - counts[pick] as f64 {
                    pick = l;
                }
            }
            site_label[i] = pick;
            counts[pick] += infos[i].rows.len();
            n_assigned[pick] += 1;
        }
        let deviation: f64 = counts.iter().zip(&targets).map(|(&c, t)| (c as f64 - t).abs()).sum();
        if deviation <= tolerance {
            return site_label;
        }
        if best.as_ref().is_none_or(|(d, _)| deviation < *d) {
            best = Some((deviation, site_label));
        }
    }
    best.expect("at least one attempt").1
}

/// Whole-site split: every row of a site shares the site's label.
pub fn site_holdout_split(ds: &Dataset, fracs: Fractions, seed: u64) -> Result<SplitAssignment> {
    let f = fracs.validate()?;
    let y = ds.target_vector(None)?;
    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    let infos = site_infos(ds, &rows, &y);
    if infos.len() < 3 {
        return Err(Error::TooSmall(format!("{} sites; site holdout needs at least 3", infos.len())));
    }
    let site_label = pack_sites(&infos, &f, &mut rng_for(seed, 0));
    let mut labels = vec![Label::Train; ds.n_rows()];
    for (info, l) in infos.iter().zip(site_label) {
        for &r in &info.rows {
            labels[r] = Label::ALL[l];
        }
    }
    Ok(SplitAssignment { labels, strategy: SplitStrategy::Site, seed })
}

pub fn split(ds: &Dataset, strategy: SplitStrategy, fracs: Fractions, seed: u64) -> Result<SplitAssignment> {
    match strategy {
        SplitStrategy::Random => stratified_random_split(ds, fracs, seed),
        SplitStrategy::Site => site_holdout_split(ds, fracs, seed),
    }
}

/// Keeps the test rows of `split` and re-partitions the remaining rows `k`
/// times into train and validation at the split's train:val ratio (8:1 by
/// default), at site granularity for site splits.
pub fn make_folds(ds: &Dataset, split: &SplitAssignment, k: usize, seed: u64) -> Result<FoldSet> {
    make_folds_with(ds, split, k, seed, Fractions::default())
}

pub fn make_folds_with(ds: &Dataset, split: &SplitAssignment, k: usize, seed: u64, fracs: Fractions) -> Result<FoldSet> {
    if k == 0 {
        return Err(Error::InvalidArgument("fold count must be positive".into()));
    }
    if split.labels.len() != ds.n_rows() {
        return Err(Error::Alignment("split assignment does not match dataset rows".into()));
    }
    let f = fracs.validate()?;
    let pool_fracs = [f[0] / (f[0] + f[1]), f[1] / (f[0] + f[1])];
    let test = split.rows(Label::Test);
    let pool: Vec<usize> = (0..ds.n_rows()).filter(|&r| split.labels[r] != Label::Test).collect();
    let y = ds.target_vector(None)?;
    let mut folds = Vec::with_capacity(k);
    match split.strategy {
        SplitStrategy::Random => {
            if pool.len() < N_STRATA {
                return Err(Error::TooSmall(format!("non-test pool of {} rows", pool.len())));
            }
            for i in 0..k {
                let mut rng = rng_for(seed, 1 + i as u64);
                let mut fold = Fold { train: Vec::new(), val: Vec::new() };
                for (r, l) in stratified_rows(&pool, &y, &pool_fracs, &mut rng) {
                    if l == 0 { fold.train.push(r) } else { fold.val.push(r) }
                }
                fold.train.sort_unstable();
                fold.val.sort_unstable();
                folds.push(fold);
            }
        }
        SplitStrategy::Site => {
            let infos = site_infos(ds, &pool, &y);
            if infos.len() < 2 {
                return Err(Error::TooSmall(format!("non-test pool has {} sites", infos.len())));
            }
            for i in 0..k {
                let mut rng = rng_for(seed, 1 + i as u64);
                let labels = pack_sites(&infos, &pool_fracs, &mut rng);
                let mut fold = Fold { train: Vec::new(), val: Vec::new() };
                for (info, l) in infos.iter().zip(labels) {
                    if l == 0 { fold.train.extend(&info.rows) } else { fold.val.extend(&info.rows) }
                }
                fold.train.sort_unstable();
                fold.val.sort_unstable();
                folds.push(fold);
            }
        }
    }
    Ok(FoldSet { test, folds, strategy: split.strategy, seed })
}

impl FoldSet {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Writes `row_index,fold,label` with one line per (fold, row).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["row_index", "fold", "label"])?;
        for (i, fold) in self.folds.iter().enumerate() {
            let mut rows: Vec<(usize, Label)> = fold
                .train
                .iter()
                .map(|&r| (r, Label::Train))
                .chain(fold.val.iter().map(|&r| (r, Label::Val)))
                .chain(self.test.iter().map(|&r| (r, Label::Test)))
                .collect();
            rows.sort_unstable();
            for (r, l) in rows {
                wr.write_record([r.to_string(), i.to_string(), l.name().to_string()])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, strategy: SplitStrategy, seed: u64) -> Result<FoldSet> {
        let mut rd = csv::Reader::from_reader(r);
        let mut folds: Vec<Fold> = Vec::new();
        let mut test: Vec<usize> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let row: usize = rec[0].parse().map_err(|_| Error::Parse(format!("row `{}`", &rec[0])))?;
            let fold: usize = rec[1].parse().map_err(|_| Error::Parse(format!("fold `{}`", &rec[1])))?;
            while folds.len() <= fold {
                folds.push(Fold { train: Vec::new(), val: Vec::new() });
            }
            match rec[2].parse::<Label>()? {
                Label::Train => folds[fold].train.push(row),
                Label::Val => folds[fold].val.push(row),
                Label::Test if fold == 0 => test.push(row),
                Label::Test => {}
            }
        }
        Ok(FoldSet { test, folds, strategy, seed })
    }
}
