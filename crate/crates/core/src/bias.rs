//! Production/sampling bias quantification: correlates per-country data
//! volume with demographic covariates, with explicit outlier exclusion and a
//! stability-over-time check on the monthly correlations.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::aggregate::CountTable;
use crate::month::Month;
use crate::record::{CodeError, CountryCode};
use crate::stats::{self, CorrelationResult, StatsError, TestResult, TestVariant};

#[derive(Debug, Error)]
pub enum BiasError {
    #[error("fewer than {needed} overlapping countries after exclusions, got {got}")]
    InsufficientOverlap { needed: usize, got: usize },
    #[error("need at least {needed} months with a defined correlation, got {got}")]
    InsufficientMonths { needed: usize, got: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    BadRow { row: u64, msg: String },
}

/// Demographic covariates the paper correlates against data volume.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    Population,
    InternetPopulation,
    Gdp,
}

impl Covariate {
    pub const ALL: [Covariate; 3] = [
        Covariate::Population,
        Covariate::InternetPopulation,
        Covariate::Gdp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Covariate::Population => "population",
            Covariate::InternetPopulation => "internet_population",
            Covariate::Gdp => "gdp",
        }
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-country demographics: population, internet users, GDP.
#[derive(Debug, Clone, PartialEq)]
pub struct DemographicProfile {
    pub country: CountryCode,
    pub population: f64,
    pub internet_population: f64,
    pub gdp: f64,
}

impl DemographicProfile {
    pub fn covariate(&self, which: Covariate) -> f64 {
        match which {
            Covariate::Population => self.population,
            Covariate::InternetPopulation => self.internet_population,
            Covariate::Gdp => self.gdp,
        }
    }
}

/// Demographics table keyed by country.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Demographics {
    profiles: BTreeMap<CountryCode, DemographicProfile>,
}

impl Demographics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, profile: DemographicProfile) -> Result<(), BiasError> {
        if profile.population < 0.0 || profile.internet_population < 0.0 || profile.gdp < 0.0 {
            return Err(BiasError::BadRow {
                row: 0,
                msg: format!("negative value for {}", profile.country),
            });
        }
        if profile.internet_population > profile.population {
            return Err(BiasError::BadRow {
                row: 0,
                msg: format!(
                    "internet population exceeds population for {}",
                    profile.country
                ),
            });
        }
        self.profiles.insert(profile.country, profile);
        Ok(())
    }

    pub fn get(&self, country: CountryCode) -> Option<&DemographicProfile> {
        self.profiles.get(&country)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Reads `country,population,internet_population,gdp` with a header row.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, BiasError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let mut demographics = Demographics::new();
        for (idx, row) in r.records().enumerate() {
            let row_no = idx as u64 + 2;
            let row = row?;
            let bad = |msg: String| BiasError::BadRow { row: row_no, msg };
            if row.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", row.len())));
            }
            let country = CountryCode::new(&row[0])
                .map_err(|e: CodeError| bad(e.to_string()))?;
            let parse = |i: usize| -> Result<f64, BiasError> {
                row[i]
                    .parse()
                    .map_err(|_| bad(format!("bad number {:?}", &row[i])))
            };
            demographics.insert(DemographicProfile {
                country,
                population: parse(1)?,
                internet_population: parse(2)?,
                gdp: parse(3)?,
            })?;
        }
        Ok(demographics)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self, BiasError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Average monthly record count per country, over the months in which the
/// country has data.
pub fn volume_vector(table: &CountTable) -> BTreeMap<CountryCode, f64> {
    table
        .countries()
        .into_iter()
        .map(|country| {
            let totals = table.country_month_totals(country);
            let mean = totals.values().sum::<u64>() as f64 / totals.len() as f64;
            (country, mean)
        })
        .collect()
}

/// Correlation of one covariate computed with and without the exclusion list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationPair {
    pub without_exclusions: CorrelationResult,
    pub with_exclusions: CorrelationResult,
}

/// Outcome of the demographic correlation analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    pub covariates: BTreeMap<Covariate, CorrelationPair>,
    pub excluded_countries: Vec<CountryCode>,
    /// Countries whose studentized residual against the fitted volume line
    /// exceeds 3 in absolute value. Reported only, never applied.
    pub suggested_outliers: BTreeMap<Covariate, Vec<CountryCode>>,
}

fn paired_vectors(
    volumes: &BTreeMap<CountryCode, f64>,
    demographics: &Demographics,
    covariate: Covariate,
    exclusions: &[CountryCode],
    log_transform: bool,
) -> (Vec<CountryCode>, Vec<f64>, Vec<f64>) {
    let mut countries = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (country, volume) in volumes {
        if exclusions.contains(country) {
            continue;
        }
        let Some(profile) = demographics.get(*country) else {
            continue;
        };
        let x = *volume;
        let y = profile.covariate(covariate);
        if log_transform {
            if x <= 0.0 || y <= 0.0 {
                continue;
            }
            countries.push(*country);
            xs.push(x.ln());
            ys.push(y.ln());
        } else {
            countries.push(*country);
            xs.push(x);
            ys.push(y);
        }
    }
    (countries, xs, ys)
}

/// Internally studentized residuals of the least-squares line y = a + b x;
/// countries with |residual| > 3 are suggested as outliers.
fn studentized_outliers(countries: &[CountryCode], xs: &[f64], ys: &[f64]) -> Vec<CountryCode> {
    let n = xs.len();
    if n < 4 {
        return Vec::new();
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Vec::new();
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y - intercept - slope * x)
        .collect();
    let s2 = residuals.iter().map(|e| e * e).sum::<f64>() / (nf - 2.0);
    if s2 == 0.0 {
        return Vec::new();
    }
    let mut flagged = Vec::new();
    for ((country, x), e) in countries.iter().zip(xs).zip(&residuals) {
        let leverage = 1.0 / nf + (x - mx) * (x - mx) / sxx;
        let denom = (s2 * (1.0 - leverage)).sqrt();
        if denom > 0.0 && (e / denom).abs() > 3.0 {
            flagged.push(*country);
        }
    }
    flagged
}

/// Pearson r per covariate over the countries shared between the volume
/// vector and the demographics table, with the exclusion list applied and
/// echoed. Both the excluded and unexcluded runs are reported.
pub fn correlate_demographics(
    volumes: &BTreeMap<CountryCode, f64>,
    demographics: &Demographics,
    exclusions: &[CountryCode],
    log_transform: bool,
) -> Result<BiasReport, BiasError> {
    let mut covariates = BTreeMap::new();
    let mut suggested = BTreeMap::new();
    for covariate in Covariate::ALL {
        let (countries, xs, ys) =
            paired_vectors(volumes, demographics, covariate, exclusions, log_transform);
        if xs.len() < 3 {
            return Err(BiasError::InsufficientOverlap {
                needed: 3,
                got: xs.len(),
            });
        }
        let mut retained = stats::pearson(&xs, &ys)?;
        retained.excluded = exclusions.iter().map(|c| c.to_string()).collect();
        let (_, all_xs, all_ys) =
            paired_vectors(volumes, demographics, covariate, &[], log_transform);
        let all = stats::pearson(&all_xs, &all_ys)?;
        suggested.insert(covariate, studentized_outliers(&countries, &xs, &ys));
        covariates.insert(
            covariate,
            CorrelationPair {
                without_exclusions: all,
                with_exclusions: retained,
            },
        );
    }
    Ok(BiasReport {
        covariates,
        excluded_countries: exclusions.to_vec(),
        suggested_outliers: suggested,
    })
}

/// Per-month correlation between country volume and one covariate, plus a
/// two-sample test comparing the first and second halves of the r series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthlyStability {
    pub covariate: Covariate,
    pub r_by_month: BTreeMap<Month, f64>,
    pub split_test: TestResult,
}

/// Computes r(volume, covariate) for each month in isolation, then tests
/// whether the first-half and second-half r values differ.
pub fn monthly_correlation_stability(
    table: &CountTable,
    demographics: &Demographics,
    covariate: Covariate,
    exclusions: &[CountryCode],
    variant: TestVariant,
) -> Result<MonthlyStability, BiasError> {
    let months = table.months();
    if months.len() < 4 {
        return Err(BiasError::InsufficientMonths {
            needed: 4,
            got: months.len(),
        });
    }
    let mut r_by_month = BTreeMap::new();
    for month in months {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for country in table.countries() {
            if exclusions.contains(&country) {
                continue;
            }
            let total = table.total(country, month);
            if total == 0 {
                continue;
            }
            let Some(profile) = demographics.get(country) else {
                continue;
            };
            xs.push(total as f64);
            ys.push(profile.covariate(covariate));
        }
        if let Ok(result) = stats::pearson(&xs, &ys) {
            r_by_month.insert(month, result.r);
        }
    }
    if r_by_month.len() < 4 {
        return Err(BiasError::InsufficientMonths {
            needed: 4,
            got: r_by_month.len(),
        });
    }
    let series: Vec<f64> = r_by_month.values().copied().collect();
    let (first, second) = series.split_at(series.len() / 2);
    let split_test = stats::t_test(first, second, variant)?;
    Ok(MonthlyStability {
        covariate,
        r_by_month,
        split_test,
    })
}
