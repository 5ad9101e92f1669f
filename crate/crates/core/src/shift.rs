//! Seasonally-aligned shift detection: compares per-country monthly HHI
//! between a treatment window and a baseline window composed of the same
//! calendar months one year earlier, classifies the direction, screens
//! temporal stability, and attributes significant shifts to individual
//! languages.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use serde::Serialize;
use thiserror::Error;

use crate::aggregate::CountTable;
use crate::diversity::hhi_series;
use crate::month::{Month, MonthRange};
use crate::record::{CountryCode, LanguageCode};
use crate::registry::CountryRegistry;
use crate::stats::{self, StatsError, TestResult, TestVariant};

/// Default share a language must hold in the baseline window to be attributed.
pub const DEFAULT_ATTRIBUTION_THRESHOLD: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ShiftError {
    #[error("windows must be disjoint")]
    OverlappingWindows,
    #[error("windows must have equal length, got {treatment} and {baseline}")]
    UnequalWindows { treatment: usize, baseline: usize },
    #[error("windows are not aligned by calendar month")]
    MisalignedWindows,
    #[error("{country}: need at least 2 non-thin months per window, got {treatment} treatment and {baseline} baseline")]
    InsufficientData {
        country: CountryCode,
        treatment: usize,
        baseline: usize,
    },
    #[error("need at least {needed} months, got {got}")]
    InsufficientMonths { needed: usize, got: usize },
    #[error("{0}: no usable months")]
    NoData(CountryCode),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("registry: {0}")]
    Registry(#[from] crate::aggregate::AggregateError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// A treatment window and its seasonally-aligned baseline.
///
/// Windows are disjoint, equal-length, and carry the same multiset of
/// months-of-year so seasonal cycles cancel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPair {
    treatment: Vec<Month>,
    baseline: Vec<Month>,
}

impl WindowPair {
    pub fn new(treatment: Vec<Month>, baseline: Vec<Month>) -> Result<Self, ShiftError> {
        if treatment.len() != baseline.len() {
            return Err(ShiftError::UnequalWindows {
                treatment: treatment.len(),
                baseline: baseline.len(),
            });
        }
        if treatment.iter().any(|m| baseline.contains(m)) {
            return Err(ShiftError::OverlappingWindows);
        }
        let mut treatment_moy: Vec<u8> = treatment.iter().map(|m| m.month_of_year()).collect();
        let mut baseline_moy: Vec<u8> = baseline.iter().map(|m| m.month_of_year()).collect();
        treatment_moy.sort_unstable();
        baseline_moy.sort_unstable();
        if treatment_moy != baseline_moy {
            return Err(ShiftError::MisalignedWindows);
        }
        let mut treatment = treatment;
        let mut baseline = baseline;
        treatment.sort_unstable();
        baseline.sort_unstable();
        Ok(WindowPair { treatment, baseline })
    }

    pub fn from_ranges(treatment: MonthRange, baseline: MonthRange) -> Result<Self, ShiftError> {
        Self::new(treatment.iter().collect(), baseline.iter().collect())
    }

    /// March-August 2020 against March-August 2019.
    pub fn pandemic_default() -> Self {
        let range = |y| {
            MonthRange::new(Month::new(y, 3).unwrap(), Month::new(y, 8).unwrap()).unwrap()
        };
        Self::from_ranges(range(2020), range(2019)).unwrap()
    }

    pub fn treatment(&self) -> &[Month] {
        &self.treatment
    }

    pub fn baseline(&self) -> &[Month] {
        &self.baseline
    }

    /// The same pair with treatment and baseline roles swapped.
    pub fn swapped(&self) -> Self {
        WindowPair {
            treatment: self.baseline.clone(),
            baseline: self.treatment.clone(),
        }
    }
}

/// Whether a significant change concentrated or diversified the landscape.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    MoreConcentrated,
    MoreDiverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::MoreConcentrated => "more_concentrated",
            Direction::MoreDiverse => "more_diverse",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-country shift detection outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftEntry {
    pub country: CountryCode,
    pub test: TestResult,
    /// `MoreConcentrated` iff mean treatment HHI > mean baseline HHI.
    pub direction: Direction,
    /// Exactly equal means; reported as `MoreDiverse` with this flag set.
    pub tie: bool,
    pub mean_hhi_treatment: f64,
    pub mean_hhi_baseline: f64,
    pub months_used_treatment: Vec<Month>,
    pub months_used_baseline: Vec<Month>,
    /// Window months dropped because the cell was below min_support.
    pub thin_excluded: Vec<Month>,
}

fn window_hhi_values(
    table: &CountTable,
    country: CountryCode,
    window: &[Month],
    min_support: u64,
) -> (Vec<Month>, Vec<f64>, Vec<Month>) {
    let mut used = Vec::new();
    let mut values = Vec::new();
    let mut thin = Vec::new();
    for month in window {
        let total = table.total(country, *month);
        if total == 0 {
            continue;
        }
        if total < min_support {
            thin.push(*month);
            continue;
        }
        let dist = table
            .distribution(country, std::slice::from_ref(month))
            .expect("non-empty cell");
        used.push(*month);
        values.push(crate::diversity::hhi(&dist).value);
    }
    (used, values, thin)
}

/// Welch test on monthly HHI values in the treatment window against the
/// baseline window, with direction from the mean comparison.
pub fn detect_shift(
    table: &CountTable,
    country: CountryCode,
    windows: &WindowPair,
    min_support: u64,
    variant: TestVariant,
) -> Result<ShiftEntry, ShiftError> {
    let (used_t, values_t, thin_t) =
        window_hhi_values(table, country, windows.treatment(), min_support);
    let (used_b, values_b, thin_b) =
        window_hhi_values(table, country, windows.baseline(), min_support);
    if values_t.len() < 2 || values_b.len() < 2 {
        return Err(ShiftError::InsufficientData {
            country,
            treatment: values_t.len(),
            baseline: values_b.len(),
        });
    }
    let test = stats::t_test(&values_t, &values_b, variant)?;
    let mean_t = values_t.iter().sum::<f64>() / values_t.len() as f64;
    let mean_b = values_b.iter().sum::<f64>() / values_b.len() as f64;
    let tie = mean_t == mean_b;
    let direction = if mean_t > mean_b {
        Direction::MoreConcentrated
    } else {
        Direction::MoreDiverse
    };
    let mut thin_excluded = thin_t;
    thin_excluded.extend(thin_b);
    thin_excluded.sort_unstable();
    Ok(ShiftEntry {
        country,
        test,
        direction,
        tie,
        mean_hhi_treatment: mean_t,
        mean_hhi_baseline: mean_b,
        months_used_treatment: used_t,
        months_used_baseline: used_b,
        thin_excluded,
    })
}

/// Stability screen over the full period: per-region and per-country Welch
/// tests comparing monthly shares of global volume between the first and
/// second halves.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub regions: BTreeMap<String, TestResult>,
    pub countries: BTreeMap<CountryCode, TestResult>,
}

fn split_test(series: &[f64], variant: TestVariant) -> Result<TestResult, StatsError> {
    let (first, second) = series.split_at(series.len() / 2);
    stats::t_test(first, second, variant)
}

/// Tests each region's and each country's monthly share of global volume for
/// a first-half vs second-half difference.
pub fn stability_screen(
    table: &CountTable,
    registry: &CountryRegistry,
    variant: TestVariant,
) -> Result<StabilityReport, ShiftError> {
    let months = table.months();
    if months.len() < 4 {
        return Err(ShiftError::InsufficientMonths {
            needed: 4,
            got: months.len(),
        });
    }
    let rollup = table.region_shares(registry)?;
    let mut regions = BTreeMap::new();
    for region in rollup.regions() {
        let series = rollup.series(&region);
        regions.insert(region, split_test(&series, variant)?);
    }
    let month_totals = table.month_totals();
    let mut countries = BTreeMap::new();
    for country in table.countries() {
        let series: Vec<f64> = months
            .iter()
            .map(|m| {
                let global = *month_totals.get(m).expect("month listed") as f64;
                table.total(country, *m) as f64 / global
            })
            .collect();
        countries.insert(country, split_test(&series, variant)?);
    }
    Ok(StabilityReport { regions, countries })
}

/// Welch test between the first-half and second-half monthly HHI values of
/// the country's full-period series (non-thin months only).
pub fn diversity_stability(
    table: &CountTable,
    country: CountryCode,
    min_support: u64,
    variant: TestVariant,
) -> Result<TestResult, ShiftError> {
    let series = hhi_series(table, country, min_support)
        .map_err(|_| ShiftError::NoData(country))?;
    let values = series.non_thin_values();
    if values.len() < 4 {
        return Err(ShiftError::InsufficientMonths {
            needed: 4,
            got: values.len(),
        });
    }
    Ok(split_test(&values, variant)?)
}

/// Per-language share comparison for one country across the window pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionEntry {
    pub country: CountryCode,
    pub language: LanguageCode,
    /// Pooled share over the baseline window's usable months.
    pub baseline_share: f64,
    /// Pooled share over the treatment window's usable months.
    pub treatment_share: f64,
    /// treatment_share - baseline_share.
    pub delta: f64,
    pub test: TestResult,
}

/// Per-language attribution of a shift: for every language with pooled
/// baseline share >= `threshold`, a Welch test on its monthly shares across
/// the windows plus the pooled shares and their delta, sorted by |delta|
/// descending.
pub fn attribute_languages(
    table: &CountTable,
    country: CountryCode,
    windows: &WindowPair,
    threshold: f64,
    min_support: u64,
    variant: TestVariant,
) -> Result<Vec<AttributionEntry>, ShiftError> {
    let usable = |window: &[Month]| -> Vec<Month> {
        window
            .iter()
            .copied()
            .filter(|m| table.total(country, *m) >= min_support.max(1))
            .collect()
    };
    let months_t = usable(windows.treatment());
    let months_b = usable(windows.baseline());
    if months_t.len() < 2 || months_b.len() < 2 {
        return Err(ShiftError::InsufficientData {
            country,
            treatment: months_t.len(),
            baseline: months_b.len(),
        });
    }
    let pooled_b = table
        .distribution(country, &months_b)
        .map_err(|_| ShiftError::NoData(country))?;
    let pooled_t = table
        .distribution(country, &months_t)
        .map_err(|_| ShiftError::NoData(country))?;

    // Candidate languages: union of both windows, filtered on baseline share.
    let mut languages: Vec<LanguageCode> = pooled_b
        .languages()
        .chain(pooled_t.languages())
        .collect();
    languages.sort_unstable();
    languages.dedup();

    let monthly_share = |language: LanguageCode, months: &[Month]| -> Vec<f64> {
        months
            .iter()
            .map(|m| {
                let cell = table.cell(country, *m).expect("usable month");
                cell.count(language) as f64 / cell.total() as f64
            })
            .collect()
    };

    let mut entries = Vec::new();
    for language in languages {
        let baseline_share = pooled_b.share(language);
        if baseline_share < threshold {
            continue;
        }
        let treatment_share = pooled_t.share(language);
        let shares_t = monthly_share(language, &months_t);
        let shares_b = monthly_share(language, &months_b);
        let test = stats::t_test(&shares_t, &shares_b, variant)?;
        entries.push(AttributionEntry {
            country,
            language,
            baseline_share,
            treatment_share,
            delta: treatment_share - baseline_share,
            test,
        });
    }
    entries.sort_by(|a, b| {
        b.delta
            .abs()
            .total_cmp(&a.delta.abs())
            .then_with(|| a.language.cmp(&b.language))
    });
    Ok(entries)
}

/// Writes `country,p,class,direction,hhi_baseline,hhi_treatment` rows.
pub fn write_report_csv<W: io::Write>(
    entries: &[ShiftEntry],
    writer: W,
) -> Result<(), ShiftError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "country",
        "p",
        "class",
        "direction",
        "hhi_baseline",
        "hhi_treatment",
    ])?;
    for e in entries {
        w.write_record([
            e.country.as_str(),
            &format!("{:e}", e.test.p_value),
            e.test.class.as_str(),
            e.direction.as_str(),
            &format!("{:.6}", e.mean_hhi_baseline),
            &format!("{:.6}", e.mean_hhi_treatment),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Figure-style choropleth export: `country,class`.
pub fn write_choropleth_csv<W: io::Write>(
    entries: &[ShiftEntry],
    writer: W,
) -> Result<(), ShiftError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["country", "class"])?;
    for e in entries {
        w.write_record([e.country.as_str(), e.test.class.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes attribution rows `country,language,normal_share,covid_share,p`.
pub fn write_attribution_csv<W: io::Write>(
    entries: &[AttributionEntry],
    writer: W,
) -> Result<(), ShiftError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["country", "language", "normal_share", "covid_share", "p"])?;
    for e in entries {
        w.write_record([
            e.country.as_str(),
            e.language.as_str(),
            &format!("{:.6}", e.baseline_share),
            &format!("{:.6}", e.treatment_share),
            &format!("{:e}", e.test.p_value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::SignificanceClass;

    fn country(c: &str) -> CountryCode {
        CountryCode::new(c).unwrap()
    }

    fn lang(l: &str) -> LanguageCode {
        LanguageCode::new(l).unwrap()
    }

    fn month(y: i32, m: u32) -> Month {
        Month::new(y, m).unwrap()
    }

    #[test]
    fn window_pair_validation() {
        assert!(WindowPair::new(
            vec![month(2020, 3), month(2020, 4)],
            vec![month(2019, 3), month(2019, 4)],
        )
        .is_ok());
        // Overlap
        assert!(matches!(
            WindowPair::new(vec![month(2020, 3)], vec![month(2020, 3)]),
            Err(ShiftError::OverlappingWindows)
        ));
        // Unequal length
        assert!(matches!(
            WindowPair::new(vec![month(2020, 3)], vec![month(2019, 3), month(2019, 4)]),
            Err(ShiftError::UnequalWindows { .. })
        ));
        // Misaligned months of year
        assert!(matches!(
            WindowPair::new(vec![month(2020, 3)], vec![month(2019, 5)]),
            Err(ShiftError::MisalignedWindows)
        ));
    }

    #[test]
    fn default_windows_are_aligned_by_twelve_months() {
        let pair = WindowPair::pandemic_default();
        assert_eq!(pair.treatment().len(), 6);
        for (t, b) in pair.treatment().iter().zip(pair.baseline()) {
            assert_eq!(t.offset(-12), *b);
        }
    }

    /// Table with per-month (eng, oth) counts for one country in both windows.
    fn two_window_table(
        treatment_eng: u64,
        treatment_oth: u64,
        baseline_eng: u64,
        baseline_oth: u64,
        jitter: bool,
    ) -> (CountTable, WindowPair) {
        let windows = WindowPair::pandemic_default();
        let mut table = CountTable::new();
        let c = country("NZL");
        for (i, m) in windows.treatment().iter().enumerate() {
            let d = if jitter { i as u64 } else { 0 };
            table.add_count(c, *m, lang("eng"), treatment_eng + d);
            table.add_count(c, *m, lang("mri"), treatment_oth);
        }
        for (i, m) in windows.baseline().iter().enumerate() {
            let d = if jitter { i as u64 } else { 0 };
            table.add_count(c, *m, lang("eng"), baseline_eng + d);
            table.add_count(c, *m, lang("mri"), baseline_oth);
        }
        (table, windows)
    }

    #[test]
    fn identical_windows_not_significant() {
        let (table, windows) = two_window_table(800, 200, 800, 200, true);
        let entry =
            detect_shift(&table, country("NZL"), &windows, 1, TestVariant::Welch).unwrap();
        assert!(entry.test.p_value > 0.05);
        assert_eq!(entry.months_used_treatment.len(), 6);
    }

    #[test]
    fn injected_nonlocal_group_flips_direction_as_expected() {
        // Locals are monolingual mri; an English-speaking non-local group is
        // present only in baseline months. Removing it concentrates shares
        // upward: direction = more_concentrated.
        let windows = WindowPair::pandemic_default();
        let mut table = CountTable::new();
        let c = country("WSM");
        for (i, m) in windows.treatment().iter().enumerate() {
            table.add_count(c, *m, lang("smo"), 1000 + i as u64);
        }
        for (i, m) in windows.baseline().iter().enumerate() {
            table.add_count(c, *m, lang("smo"), 1000 + i as u64);
            table.add_count(c, *m, lang("eng"), 400);
        }
        let entry = detect_shift(&table, c, &windows, 1, TestVariant::Welch).unwrap();
        assert!(entry.test.p_value < 0.05);
        assert_eq!(entry.direction, Direction::MoreConcentrated);
        assert!(entry.mean_hhi_treatment > entry.mean_hhi_baseline);
    }

    #[test]
    fn swapping_windows_preserves_p_and_flips_direction() {
        let (table, windows) = two_window_table(950, 50, 700, 300, true);
        let forward =
            detect_shift(&table, country("NZL"), &windows, 1, TestVariant::Welch).unwrap();
        let backward = detect_shift(
            &table,
            country("NZL"),
            &windows.swapped(),
            1,
            TestVariant::Welch,
        )
        .unwrap();
        assert_eq!(forward.test.p_value, backward.test.p_value);
        assert_ne!(forward.direction, backward.direction);
    }

    #[test]
    fn label_permutation_does_not_change_detection() {
        let (table_a, windows) = two_window_table(950, 50, 700, 300, true);
        // Same counts with language labels swapped.
        let mut table_b = CountTable::new();
        let c = country("NZL");
        for m in windows.treatment().iter().chain(windows.baseline()) {
            let cell = table_a.cell(c, *m).unwrap();
            table_b.add_count(c, *m, lang("mri"), cell.count(lang("eng")));
            table_b.add_count(c, *m, lang("eng"), cell.count(lang("mri")));
        }
        let a = detect_shift(&table_a, c, &windows, 1, TestVariant::Welch).unwrap();
        let b = detect_shift(&table_b, c, &windows, 1, TestVariant::Welch).unwrap();
        assert_eq!(a.test.p_value, b.test.p_value);
        assert_eq!(a.direction, b.direction);
    }

    #[test]
    fn thin_cells_reduce_window_below_minimum() {
        // All but one treatment month sits below min_support.
        let windows = WindowPair::pandemic_default();
        let c = country("NZL");
        let mut table = CountTable::new();
        for (i, m) in windows.treatment().iter().enumerate() {
            let n = if i == 0 { 800 } else { 3 };
            table.add_count(c, *m, lang("eng"), n);
        }
        for m in windows.baseline() {
            table.add_count(c, *m, lang("eng"), 800);
        }
        let err = detect_shift(&table, c, &windows, 500, TestVariant::Welch).unwrap_err();
        assert!(matches!(err, ShiftError::InsufficientData { treatment: 1, .. }));
    }

    #[test]
    fn stability_screen_constant_shares() {
        // Shares exactly constant across months; varying global volume.
        let mut table = CountTable::new();
        let mut registry = CountryRegistry::new();
        registry.insert(country("USA"), "America, North").unwrap();
        registry.insert(country("NZL"), "Oceania").unwrap();
        for (i, volume) in [1000u64, 2000, 4000, 8000, 1600, 3200].iter().enumerate() {
            let m = month(2019, 1).offset(i as i64);
            table.add_count(country("USA"), m, lang("eng"), volume * 3 / 4);
            table.add_count(country("NZL"), m, lang("eng"), volume / 4);
        }
        let report = stability_screen(&table, &registry, TestVariant::Welch).unwrap();
        for result in report.regions.values().chain(report.countries.values()) {
            assert_eq!(result.class, SignificanceClass::NotSignificant);
            assert_eq!(result.p_value, 1.0);
        }
    }

    #[test]
    fn stability_screen_detects_doubled_region() {
        // Oceania's share doubles in the second half. The other regions have
        // alternating month-to-month volume swings much larger than the tiny
        // loss they absorb, so only Oceania tests significant.
        let mut table = CountTable::new();
        let mut registry = CountryRegistry::new();
        registry.insert(country("USA"), "America, North").unwrap();
        registry.insert(country("NZL"), "Oceania").unwrap();
        registry.insert(country("FRA"), "Europe, West").unwrap();
        for i in 0..8u64 {
            let m = month(2019, 1).offset(i as i64);
            let nzl = if i < 4 { 1000 } else { 2000 };
            let usa = 9000 + 3000 * (i % 2);
            let fra = 6000 + 2000 * ((i + 1) % 2);
            table.add_count(country("NZL"), m, lang("eng"), nzl);
            table.add_count(country("USA"), m, lang("eng"), usa);
            table.add_count(country("FRA"), m, lang("fra"), fra);
        }
        let report = stability_screen(&table, &registry, TestVariant::Welch).unwrap();
        assert!(report.regions["Oceania"].class.is_significant());
        assert!(!report.regions["America, North"].class.is_significant());
        assert!(!report.regions["Europe, West"].class.is_significant());
    }

    #[test]
    fn stability_single_region_share_is_constant_one() {
        let mut table = CountTable::new();
        let mut registry = CountryRegistry::new();
        registry.insert(country("USA"), "America, North").unwrap();
        for i in 0..6 {
            table.add_count(
                country("USA"),
                month(2019, 1).offset(i),
                lang("eng"),
                1000 + i as u64 * 7,
            );
        }
        let report = stability_screen(&table, &registry, TestVariant::Welch).unwrap();
        let result = &report.regions["America, North"];
        assert_eq!(result.p_value, 1.0);
        assert_eq!(result.class, SignificanceClass::NotSignificant);
    }

    #[test]
    fn stability_screen_needs_four_months() {
        let mut table = CountTable::new();
        let mut registry = CountryRegistry::new();
        registry.insert(country("USA"), "America, North").unwrap();
        for i in 0..3 {
            table.add_count(country("USA"), month(2019, 1).offset(i), lang("eng"), 1000);
        }
        assert!(matches!(
            stability_screen(&table, &registry, TestVariant::Welch),
            Err(ShiftError::InsufficientMonths { .. })
        ));
    }

    #[test]
    fn diversity_stability_constant_series() {
        let mut table = CountTable::new();
        for i in 0..8 {
            let m = month(2019, 1).offset(i);
            table.add_count(country("USA"), m, lang("eng"), 900);
            table.add_count(country("USA"), m, lang("spa"), 100);
        }
        let result =
            diversity_stability(&table, country("USA"), 1, TestVariant::Welch).unwrap();
        assert_eq!(result.p_value, 1.0);
        assert!(result.degenerate);
    }

    #[test]
    fn diversity_stability_detects_step_change() {
        let mut table = CountTable::new();
        for i in 0..8 {
            let m = month(2019, 1).offset(i);
            // Step: second half far more concentrated, with slight jitter.
            let (eng, spa) = if i < 4 {
                (600 + i as u64, 400)
            } else {
                (950 + i as u64, 50)
            };
            table.add_count(country("USA"), m, lang("eng"), eng);
            table.add_count(country("USA"), m, lang("spa"), spa);
        }
        let result =
            diversity_stability(&table, country("USA"), 1, TestVariant::Welch).unwrap();
        assert!(result.p_value < 0.05);
    }

    #[test]
    fn attribution_threshold_and_zero_sum() {
        let windows = WindowPair::pandemic_default();
        let mut table = CountTable::new();
        let c = country("ERI");
        for (i, m) in windows.baseline().iter().enumerate() {
            table.add_count(c, *m, lang("eng"), 6000 + i as u64);
            table.add_count(c, *m, lang("tir"), 3800);
            table.add_count(c, *m, lang("fra"), 80); // ~0.8%: below threshold
        }
        for (i, m) in windows.treatment().iter().enumerate() {
            table.add_count(c, *m, lang("eng"), 4000 + i as u64);
            table.add_count(c, *m, lang("tir"), 5500);
            table.add_count(c, *m, lang("fra"), 70);
        }
        let entries =
            attribute_languages(&table, c, &windows, 0.01, 1, TestVariant::Welch).unwrap();
        assert!(entries.iter().all(|e| e.language != lang("fra")));
        assert!(entries.iter().any(|e| e.language == lang("eng")));
        // Sorted by |delta| descending.
        for pair in entries.windows(2) {
            assert!(pair[0].delta.abs() >= pair[1].delta.abs());
        }
        // Unthresholded deltas are zero-sum.
        let all =
            attribute_languages(&table, c, &windows, 0.0, 1, TestVariant::Welch).unwrap();
        let delta_sum: f64 = all.iter().map(|e| e.delta).sum();
        assert!(delta_sum.abs() < 1e-9, "delta sum = {delta_sum}");
    }

    #[test]
    fn attribution_unchanged_shares_not_significant() {
        let (table, windows) = two_window_table(800, 200, 800, 200, true);
        let entries = attribute_languages(
            &table,
            country("NZL"),
            &windows,
            0.01,
            1,
            TestVariant::Welch,
        )
        .unwrap();
        assert_eq!(entries.len(), 2);
        for e in &entries {
            assert!(!e.test.class.is_significant());
            assert!(e.delta.abs() < 0.01);
        }
    }
}
