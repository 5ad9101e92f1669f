//! Mergeable count tables keyed by (country, month, language), share
//! distributions, and regional rollups.
//!
//! `CountTable` is a pure value with an associative, commutative merge, so
//! shards can be built in parallel and combined. Serialization is a
//! `country,month,language,count` CSV with lossless round-trip.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::month::Month;
use crate::record::{CountryCode, LanguageCode, Record};
use crate::registry::CountryRegistry;

/// Default minimum records per (country, month) cell for significance tests.
/// Cells below it are "thin": kept in descriptive tables, excluded from tests.
pub const DEFAULT_MIN_SUPPORT: u64 = 500;

/// Tolerance for share vectors summing to one.
pub const SHARE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("no data for {country} in the requested months")]
    EmptyCell { country: CountryCode },
    #[error("country {0} missing from the registry")]
    UnmappedCountry(CountryCode),
    #[error("invalid shares: {0}")]
    InvalidShares(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    BadRow { row: u64, msg: String },
}

/// Language counts for one (country, month) cell.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cell {
    counts: BTreeMap<LanguageCode, u64>,
    total: u64,
}

impl Cell {
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, language: LanguageCode) -> u64 {
        self.counts.get(&language).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> impl Iterator<Item = (LanguageCode, u64)> + '_ {
        self.counts.iter().map(|(l, c)| (*l, *c))
    }

    fn add(&mut self, language: LanguageCode, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(language).or_insert(0) += n;
        self.total += n;
    }
}

/// Counts keyed by (country, month) -> language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountTable {
    cells: BTreeMap<(CountryCode, Month), Cell>,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds one validated record in: exactly one cell count and one total
    /// incremented by 1.
    pub fn accumulate(&mut self, record: &Record) {
        self.add_count(record.country, record.month(), record.language, 1);
    }

    pub fn add_count(&mut self, country: CountryCode, month: Month, language: LanguageCode, n: u64) {
        if n == 0 {
            return;
        }
        self.cells
            .entry((country, month))
            .or_default()
            .add(language, n);
    }

    /// Cellwise sum. Associative and commutative with the empty table as identity.
    pub fn merge(&mut self, other: CountTable) {
        for ((country, month), cell) in other.cells {
            for (language, count) in cell.counts {
                self.add_count(country, month, language, count);
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, country: CountryCode, month: Month) -> Option<&Cell> {
        self.cells.get(&(country, month))
    }

    pub fn total(&self, country: CountryCode, month: Month) -> u64 {
        self.cell(country, month).map_or(0, Cell::total)
    }

    /// Total records in the whole table.
    pub fn grand_total(&self) -> u64 {
        self.cells.values().map(Cell::total).sum()
    }

    /// Distinct countries, sorted.
    pub fn countries(&self) -> Vec<CountryCode> {
        let mut out: Vec<CountryCode> = self.cells.keys().map(|(c, _)| *c).collect();
        out.dedup();
        out
    }

    /// Distinct months across all countries, sorted.
    pub fn months(&self) -> Vec<Month> {
        let mut out: Vec<Month> = self.cells.keys().map(|(_, m)| *m).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Months with data for one country, sorted.
    pub fn months_for(&self, country: CountryCode) -> Vec<Month> {
        self.cells
            .range((country, Month::new(i32::MIN, 1).unwrap())..)
            .take_while(|((c, _), _)| *c == country)
            .map(|((_, m), _)| *m)
            .collect()
    }

    /// Months where the country's cell meets `min_support`, sorted.
    pub fn non_thin_months(&self, country: CountryCode, min_support: u64) -> Vec<Month> {
        self.months_for(country)
            .into_iter()
            .filter(|m| self.total(country, *m) >= min_support)
            .collect()
    }

    /// Months where the country has data but below `min_support`, sorted.
    pub fn thin_months(&self, country: CountryCode, min_support: u64) -> Vec<Month> {
        self.months_for(country)
            .into_iter()
            .filter(|m| self.total(country, *m) < min_support)
            .collect()
    }

    /// Global record volume per month.
    pub fn month_totals(&self) -> BTreeMap<Month, u64> {
        let mut totals = BTreeMap::new();
        for ((_, month), cell) in &self.cells {
            *totals.entry(*month).or_insert(0) += cell.total();
        }
        totals
    }

    /// One country's record volume per month (only months with data).
    pub fn country_month_totals(&self, country: CountryCode) -> BTreeMap<Month, u64> {
        self.months_for(country)
            .into_iter()
            .map(|m| (m, self.total(country, m)))
            .collect()
    }

    /// Pooled share distribution for a country over a set of months.
    ///
    /// Pooling is count-weighted: counts are summed across the months, then
    /// divided by the pooled total.
    pub fn distribution(
        &self,
        country: CountryCode,
        months: &[Month],
    ) -> Result<LanguageDistribution, AggregateError> {
        let mut pooled: BTreeMap<LanguageCode, u64> = BTreeMap::new();
        for month in months {
            if let Some(cell) = self.cell(country, *month) {
                for (language, count) in cell.counts() {
                    *pooled.entry(language).or_insert(0) += count;
                }
            }
        }
        LanguageDistribution::from_counts(pooled)
            .map_err(|_| AggregateError::EmptyCell { country })
    }

    /// Per-month, per-region fraction of global record volume.
    pub fn region_shares(&self, registry: &CountryRegistry) -> Result<RegionRollup, AggregateError> {
        let mut by_month: BTreeMap<Month, BTreeMap<String, u64>> = BTreeMap::new();
        for ((country, month), cell) in &self.cells {
            let region = registry
                .region_of(*country)
                .ok_or(AggregateError::UnmappedCountry(*country))?;
            *by_month
                .entry(*month)
                .or_default()
                .entry(region.to_string())
                .or_insert(0) += cell.total();
        }
        let shares = by_month
            .into_iter()
            .map(|(month, counts)| {
                let total: u64 = counts.values().sum();
                let shares = counts
                    .into_iter()
                    .map(|(region, n)| (region, n as f64 / total as f64))
                    .collect();
                (month, shares)
            })
            .collect();
        Ok(RegionRollup { shares })
    }

    /// Writes `country,month,language,count` rows with a header.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), AggregateError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["country", "month", "language", "count"])?;
        for ((country, month), cell) in &self.cells {
            for (language, count) in cell.counts() {
                w.write_record([
                    country.as_str(),
                    &month.to_string(),
                    language.as_str(),
                    &count.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<(), AggregateError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads the `country,month,language,count` format written by `write_csv`.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, AggregateError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut table = CountTable::new();
        for (idx, row) in r.records().enumerate() {
            let row_no = idx as u64 + 2; // header is row 1
            let row = row?;
            let bad = |msg: String| AggregateError::BadRow { row: row_no, msg };
            if row.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", row.len())));
            }
            let country =
                CountryCode::new(&row[0]).map_err(|e| bad(e.to_string()))?;
            let month: Month = row[1].parse().map_err(|e: crate::month::MonthError| bad(e.to_string()))?;
            let language =
                LanguageCode::new(&row[2]).map_err(|e| bad(e.to_string()))?;
            let count: u64 = row[3]
                .parse()
                .map_err(|_| bad(format!("bad count {:?}", &row[3])))?;
            table.add_count(country, month, language, count);
        }
        Ok(table)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self, AggregateError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Normalized share vector for one (country, month) or (country, period) cell.
///
/// Shares are maximum-likelihood: zero-count languages are omitted, every
/// stored share is > 0, and the shares sum to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageDistribution {
    shares: BTreeMap<LanguageCode, f64>,
    support_count: u64,
}

impl LanguageDistribution {
    /// Builds shares from raw counts. Zero-count entries are dropped.
    pub fn from_counts<I>(counts: I) -> Result<Self, AggregateError>
    where
        I: IntoIterator<Item = (LanguageCode, u64)>,
    {
        let counts: BTreeMap<LanguageCode, u64> =
            counts.into_iter().filter(|(_, n)| *n > 0).collect();
        let total: u64 = counts.values().sum();
        if total == 0 {
            return Err(AggregateError::InvalidShares(
                "no nonzero counts".to_string(),
            ));
        }
        let shares = counts
            .into_iter()
            .map(|(language, n)| (language, n as f64 / total as f64))
            .collect();
        Ok(LanguageDistribution {
            shares,
            support_count: total,
        })
    }

    /// Builds a distribution directly from shares, validating that they are
    /// positive and sum to 1 within tolerance.
    pub fn from_shares(
        shares: BTreeMap<LanguageCode, f64>,
        support_count: u64,
    ) -> Result<Self, AggregateError> {
        if shares.is_empty() {
            return Err(AggregateError::InvalidShares("empty distribution".to_string()));
        }
        if let Some((language, share)) = shares.iter().find(|(_, s)| **s <= 0.0) {
            return Err(AggregateError::InvalidShares(format!(
                "share for {language} must be positive, got {share}"
            )));
        }
        let sum: f64 = shares.values().sum();
        if (sum - 1.0).abs() > SHARE_SUM_TOLERANCE {
            return Err(AggregateError::InvalidShares(format!(
                "shares sum to {sum}, expected 1"
            )));
        }
        Ok(LanguageDistribution {
            shares,
            support_count,
        })
    }

    pub fn share(&self, language: LanguageCode) -> f64 {
        self.shares.get(&language).copied().unwrap_or(0.0)
    }

    pub fn shares(&self) -> impl Iterator<Item = (LanguageCode, f64)> + '_ {
        self.shares.iter().map(|(l, s)| (*l, *s))
    }

    pub fn languages(&self) -> impl Iterator<Item = LanguageCode> + '_ {
        self.shares.keys().copied()
    }

    /// Number of languages with nonzero share.
    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    pub fn support_count(&self) -> u64 {
        self.support_count
    }
}

/// Per-month share of global record volume by region.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRollup {
    shares: BTreeMap<Month, BTreeMap<String, f64>>,
}

impl RegionRollup {
    pub fn months(&self) -> impl Iterator<Item = Month> + '_ {
        self.shares.keys().copied()
    }

    pub fn regions(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .shares
            .values()
            .flat_map(|m| m.keys().cloned())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Share of global volume for a region in a month (0 if absent).
    pub fn share(&self, month: Month, region: &str) -> f64 {
        self.shares
            .get(&month)
            .and_then(|m| m.get(region))
            .copied()
            .unwrap_or(0.0)
    }

    /// A region's share series over the rollup's months, zeros filled in.
    pub fn series(&self, region: &str) -> Vec<f64> {
        self.shares
            .values()
            .map(|m| m.get(region).copied().unwrap_or(0.0))
            .collect()
    }

    /// Mean share of a region over all months.
    pub fn mean_share(&self, region: &str) -> f64 {
        let series = self.series(region);
        series.iter().sum::<f64>() / series.len() as f64
    }
}
