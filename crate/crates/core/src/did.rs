//! Difference-in-differences analysis: separates pandemic-caused diversity
//! changes from pre-existing trends using months of year shared across three
//! consecutive years. Data from the pre year is the control comparison, data
//! from the post year the effect comparison.

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::CountTable;
use crate::diversity;
use crate::month::Month;
use crate::record::CountryCode;
use crate::stats::{self, StatsError, TestResult, TestVariant};

/// Default threshold: COVID attribution needs p_covid < alpha.
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Default ratio operationalizing "much greater difference" for amplification.
pub const DEFAULT_AMPLIFICATION_RATIO: f64 = 5.0;

#[derive(Debug, Error)]
pub enum DidError {
    #[error("window years must be distinct, got {0}, {1}, {2}")]
    OverlappingYears(i32, i32, i32),
    #[error("months of year must be non-empty and within 1-12")]
    BadMonths,
    #[error("{country}: fewer than 2 aligned non-thin months across the three year windows ({usable} usable)")]
    InsufficientData { country: CountryCode, usable: usize },
    #[error("no country with p_covid below {alpha}")]
    NoSignificantCountries { alpha: f64 },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Months of year instantiated in three consecutive years.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DidWindows {
    pub months_of_year: Vec<u8>,
    pub year_pre: i32,
    pub year_mid: i32,
    pub year_post: i32,
}

impl DidWindows {
    pub fn new(
        months_of_year: Vec<u8>,
        year_pre: i32,
        year_mid: i32,
        year_post: i32,
    ) -> Result<Self, DidError> {
        let mut months = months_of_year;
        months.sort_unstable();
        months.dedup();
        if months.is_empty() || months.iter().any(|m| !(1..=12).contains(m)) {
            return Err(DidError::BadMonths);
        }
        if year_pre == year_mid || year_mid == year_post || year_pre == year_post {
            return Err(DidError::OverlappingYears(year_pre, year_mid, year_post));
        }
        Ok(DidWindows {
            months_of_year: months,
            year_pre,
            year_mid,
            year_post,
        })
    }

    /// July-September over 2018/2019/2020.
    pub fn pandemic_default() -> Self {
        Self::new(vec![7, 8, 9], 2018, 2019, 2020).unwrap()
    }

    fn instantiate(&self, months: &[u8], year: i32) -> Vec<Month> {
        months
            .iter()
            .map(|m| Month::new(year, *m as u32).unwrap())
            .collect()
    }
}

/// Classification of a country's diversity change.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DidClass {
    CovidCreated,
    CovidAmplified,
    PreExisting,
    NotSignificant,
}

impl DidClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DidClass::CovidCreated => "covid_created",
            DidClass::CovidAmplified => "covid_amplified",
            DidClass::PreExisting => "pre_existing",
            DidClass::NotSignificant => "not_significant",
        }
    }
}

impl fmt::Display for DidClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies from the two p-values:
/// not significant when p_covid >= alpha; created when only p_covid is
/// significant; amplified when both are significant and p_covid is smaller
/// than p_baseline by more than `amplification_ratio`; otherwise pre-existing.
pub fn classify_did(
    p_baseline: f64,
    p_covid: f64,
    alpha: f64,
    amplification_ratio: f64,
) -> DidClass {
    if p_covid >= alpha {
        DidClass::NotSignificant
    } else if p_baseline >= alpha {
        DidClass::CovidCreated
    } else if p_covid < p_baseline / amplification_ratio {
        DidClass::CovidAmplified
    } else {
        DidClass::PreExisting
    }
}

/// Per-country DiD outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct DidEntry {
    pub country: CountryCode,
    /// Welch test year_pre window vs year_mid window.
    pub test_baseline: TestResult,
    /// Welch test year_mid window vs year_post window.
    pub test_covid: TestResult,
    pub class: DidClass,
    /// Months of year actually used, after narrowing to those with non-thin
    /// data in all three years.
    pub months_used: Vec<u8>,
    /// Set when months_used is a strict subset of the configured months.
    pub narrowed: bool,
}

impl DidEntry {
    pub fn p_baseline(&self) -> f64 {
        self.test_baseline.p_value
    }

    pub fn p_covid(&self) -> f64 {
        self.test_covid.p_value
    }
}

/// Runs the two pairwise tests for one country and classifies the outcome.
///
/// The configured months of year are narrowed to those where the country has
/// non-thin data in all three years, keeping the three windows aligned; the
/// narrowing is recorded on the entry.
pub fn did_analyze(
    table: &CountTable,
    country: CountryCode,
    windows: &DidWindows,
    min_support: u64,
    alpha: f64,
    amplification_ratio: f64,
    variant: TestVariant,
) -> Result<DidEntry, DidError> {
    let usable: Vec<u8> = windows
        .months_of_year
        .iter()
        .copied()
        .filter(|m| {
            [windows.year_pre, windows.year_mid, windows.year_post]
                .iter()
                .all(|y| {
                    table.total(country, Month::new(*y, *m as u32).unwrap()) >= min_support.max(1)
                })
        })
        .collect();
    if usable.len() < 2 {
        return Err(DidError::InsufficientData {
            country,
            usable: usable.len(),
        });
    }
    let hhi_values = |year: i32| -> Vec<f64> {
        windows
            .instantiate(&usable, year)
            .iter()
            .map(|m| {
                let dist = table
                    .distribution(country, std::slice::from_ref(m))
                    .expect("usable month");
                diversity::hhi(&dist).value
            })
            .collect()
    };
    let pre = hhi_values(windows.year_pre);
    let mid = hhi_values(windows.year_mid);
    let post = hhi_values(windows.year_post);
    let test_baseline = stats::t_test(&pre, &mid, variant)?;
    let test_covid = stats::t_test(&mid, &post, variant)?;
    let class = classify_did(
        test_baseline.p_value,
        test_covid.p_value,
        alpha,
        amplification_ratio,
    );
    Ok(DidEntry {
        country,
        test_baseline,
        test_covid,
        class,
        narrowed: usable.len() < windows.months_of_year.len(),
        months_used: usable,
    })
}

/// Attribution summary over classified countries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DidSummary {
    pub created: usize,
    pub amplified: usize,
    pub pre_existing: usize,
    pub not_significant: usize,
    /// (created + amplified) / (created + amplified + pre_existing).
    pub covid_attributed_fraction: f64,
}

/// Counts the classification multiset and computes the attribution fraction.
pub fn did_summary(entries: &[DidEntry], alpha: f64) -> Result<DidSummary, DidError> {
    let mut created = 0;
    let mut amplified = 0;
    let mut pre_existing = 0;
    let mut not_significant = 0;
    for e in entries {
        match e.class {
            DidClass::CovidCreated => created += 1,
            DidClass::CovidAmplified => amplified += 1,
            DidClass::PreExisting => pre_existing += 1,
            DidClass::NotSignificant => not_significant += 1,
        }
    }
    let changed = created + amplified + pre_existing;
    if changed == 0 {
        return Err(DidError::NoSignificantCountries { alpha });
    }
    Ok(DidSummary {
        created,
        amplified,
        pre_existing,
        not_significant,
        covid_attributed_fraction: (created + amplified) as f64 / changed as f64,
    })
}

/// Writes `country,p_baseline,p_covid,class` rows.
pub fn write_report_csv<W: io::Write>(entries: &[DidEntry], writer: W) -> Result<(), io::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["country", "p_baseline", "p_covid", "class"])
        .map_err(io::Error::other)?;
    for e in entries {
        w.write_record([
            e.country.as_str(),
            &format!("{:e}", e.p_baseline()),
            &format!("{:e}", e.p_covid()),
            e.class.as_str(),
        ])
        .map_err(io::Error::other)?;
    }
    w.flush()?;
    Ok(())
}
