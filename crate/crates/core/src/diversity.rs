//! Herfindahl-Hirschman Index of language distributions and per-country
//! monthly HHI series.
//!
//! HHI is the sum of squared shares, reported on the [0, 1] scale: near 1 one
//! language dominates, near 1/k the landscape is evenly multilingual over k
//! languages.

use std::io;

use thiserror::Error;

use crate::aggregate::{AggregateError, CountTable, LanguageDistribution};
use crate::month::Month;
use crate::record::CountryCode;

#[derive(Debug, Error)]
pub enum DiversityError {
    #[error("no data for {0}")]
    NoData(CountryCode),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// One HHI measurement and the record count behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HhiValue {
    pub value: f64,
    pub support_count: u64,
}

/// Sum of squared shares of a distribution.
///
/// Lies in [1/k, 1] for k languages; 1/k exactly at uniform, 1 at degenerate.
pub fn hhi(dist: &LanguageDistribution) -> HhiValue {
    let value = dist.shares().map(|(_, s)| s * s).sum();
    HhiValue {
        value,
        support_count: dist.support_count(),
    }
}

/// One month's HHI within a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HhiPoint {
    pub month: Month,
    pub value: f64,
    pub support: u64,
    /// Below the minimum support threshold; excluded from significance tests.
    pub thin: bool,
}

/// Monthly HHI values for one country, the unit of all significance tests.
#[derive(Debug, Clone, PartialEq)]
pub struct HhiSeries {
    pub country: CountryCode,
    /// Months strictly increasing.
    pub points: Vec<HhiPoint>,
}

impl HhiSeries {
    /// HHI values of the non-thin months, in month order.
    pub fn non_thin_values(&self) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| !p.thin)
            .map(|p| p.value)
            .collect()
    }

    pub fn value_at(&self, month: Month) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.month == month)
            .map(|p| p.value)
    }

    /// Mean of the monthly HHI values (the mean-of-months reading of
    /// "averaged", distinct from [`hhi_baseline`]'s pooled-counts reading).
    pub fn mean_monthly(&self, include_thin: bool) -> Option<f64> {
        let values: Vec<f64> = self
            .points
            .iter()
            .filter(|p| include_thin || !p.thin)
            .map(|p| p.value)
            .collect();
        if values.is_empty() {
            return None;
        }
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// One HHI point per non-empty month for the country, computed from that
/// month's own distribution. Months below `min_support` are flagged thin.
pub fn hhi_series(
    table: &CountTable,
    country: CountryCode,
    min_support: u64,
) -> Result<HhiSeries, DiversityError> {
    let months = table.months_for(country);
    if months.is_empty() {
        return Err(DiversityError::NoData(country));
    }
    let points = months
        .into_iter()
        .map(|month| {
            let dist = table
                .distribution(country, &[month])
                .expect("month listed by months_for has data");
            let value = hhi(&dist);
            HhiPoint {
                month,
                value: value.value,
                support: value.support_count,
                thin: value.support_count < min_support,
            }
        })
        .collect();
    Ok(HhiSeries { country, points })
}

/// HHI of the pooled distribution over a period: counts are pooled across the
/// months first, then the shares are squared and summed.
pub fn hhi_baseline(
    table: &CountTable,
    country: CountryCode,
    period: &[Month],
) -> Result<HhiValue, DiversityError> {
    match table.distribution(country, period) {
        Ok(dist) => Ok(hhi(&dist)),
        Err(AggregateError::EmptyCell { .. }) => Err(DiversityError::NoData(country)),
        Err(AggregateError::Io(e)) => Err(DiversityError::Io(e)),
        Err(_) => Err(DiversityError::NoData(country)),
    }
}

/// Writes `country,month,hhi,support` rows for a set of series.
pub fn write_series_csv<W: io::Write>(
    series: &[HhiSeries],
    writer: W,
) -> Result<(), DiversityError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["country", "month", "hhi", "support"])?;
    for s in series {
        for p in &s.points {
            w.write_record([
                s.country.as_str(),
                &p.month.to_string(),
                &format!("{:.6}", p.value),
                &p.support.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Choropleth-ready export: one `country,value` pair per country with the
/// pooled baseline HHI over the given period.
pub fn write_choropleth_csv<W: io::Write>(
    table: &CountTable,
    period: &[Month],
    writer: W,
) -> Result<(), DiversityError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["country", "value"])?;
    for country in table.countries() {
        if let Ok(value) = hhi_baseline(table, country, period) {
            w.write_record([country.as_str(), &format!("{:.6}", value.value)])?;
        }
    }
    w.flush()?;
    Ok(())
}
