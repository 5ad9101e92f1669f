//! Synthetic corpora from explicit population mixture models, with a
//! ground-truth manifest for every detector.
//!
//! A scenario lists countries; each country has groups (local or non-local)
//! with a language distribution and a monthly volume schedule. During the
//! restriction months, non-local group volumes are scaled by the restriction
//! factor. Cell counts are multinomial draws from the volume-weighted mixture.
//!
//! # Scenario file schema (TOML)
//!
//! ```toml
//! seed = 42
//! date_range = { start = "2018-07", end = "2020-08" }
//! restriction = { start = "2020-03", end = "2020-08" }
//! restriction_factor = 0.0
//!
//! [[country]]
//! code = "ERI"
//! region = "Africa, Sub"
//!
//! [[country.group]]
//! label = "locals"
//! languages = { tir = 0.5806, eng = 0.4194 }
//! volume = 31700.0
//!
//! [[country.group]]
//! label = "visitors"
//! non_local = true
//! languages = { eng = 1.0 }
//! volume = 18260.0
//! ```
//!
//! `volume` is the expected records per month; per-month overrides go in a
//! `volume_overrides` table keyed by `YYYY-MM`. `restriction_factor` defaults
//! to 1.0 (no restriction effect).
//!
//! # Determinism
//!
//! Each (country, month) cell draws from its own ChaCha8 stream keyed by
//! `splitmix64(splitmix64(seed ^ country_word) ^ month_index)`, where
//! `country_word` packs the three code bytes and `month_index` is months since
//! 0000-01. Generation is therefore reproducible for a given seed and
//! unaffected by cell evaluation order.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Deserialize;
use thiserror::Error;

use crate::aggregate::{CountTable, LanguageDistribution, SHARE_SUM_TOLERANCE};
use crate::diversity;
use crate::month::{Month, MonthRange};
use crate::record::{CountryCode, LanguageCode};
use crate::registry::CountryRegistry;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("zero expected volume for {country} in {month}")]
    ZeroVolume { country: CountryCode, month: Month },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("registry error: {0}")]
    Registry(#[from] crate::registry::RegistryError),
}

/// One population group: who they are, what they speak, how much they post.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    /// Non-local groups are scaled by the restriction factor during
    /// restriction months.
    #[serde(default)]
    pub non_local: bool,
    /// Language shares; must sum to 1.
    pub languages: BTreeMap<LanguageCode, f64>,
    /// Expected records per month.
    pub volume: f64,
    /// Per-month volume overrides, keyed by `YYYY-MM`.
    #[serde(default)]
    pub volume_overrides: BTreeMap<Month, f64>,
}

impl GroupSpec {
    /// Scheduled volume before any restriction scaling.
    pub fn scheduled_volume(&self, month: Month) -> f64 {
        self.volume_overrides.get(&month).copied().unwrap_or(self.volume)
    }
}

/// Population mixture for one country.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PopulationSpec {
    #[serde(rename = "code")]
    pub country: CountryCode,
    #[serde(default = "default_region")]
    pub region: String,
    #[serde(rename = "group")]
    pub groups: Vec<GroupSpec>,
}

fn default_region() -> String {
    "Synthetic".to_string()
}

fn default_restriction_factor() -> f64 {
    1.0
}

/// A full synthetic scenario.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub date_range: MonthRange,
    /// Months during which non-local volumes are scaled; optional.
    #[serde(default)]
    pub restriction: Option<MonthRange>,
    /// Scale applied to non-local volumes in restriction months, in [0, 1].
    #[serde(default = "default_restriction_factor")]
    pub restriction_factor: f64,
    #[serde(rename = "country")]
    pub countries: Vec<PopulationSpec>,
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_toml_path(path: &Path) -> Result<Self, SynthError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let invalid = |msg: String| Err(SynthError::Invalid(msg));
        if self.countries.is_empty() {
            return invalid("no countries".to_string());
        }
        if !(0.0..=1.0).contains(&self.restriction_factor) {
            return invalid(format!(
                "restriction_factor {} outside [0, 1]",
                self.restriction_factor
            ));
        }
        if let Some(r) = self.restriction {
            if !self.date_range.contains(r.start()) || !self.date_range.contains(r.end()) {
                return invalid(format!(
                    "restriction {r} not contained in date_range {}",
                    self.date_range
                ));
            }
        }
        for spec in &self.countries {
            if spec.groups.is_empty() {
                return invalid(format!("{}: no groups", spec.country));
            }
            for group in &spec.groups {
                if group.languages.is_empty() {
                    return invalid(format!("{}/{}: no languages", spec.country, group.label));
                }
                let sum: f64 = group.languages.values().sum();
                if (sum - 1.0).abs() > SHARE_SUM_TOLERANCE {
                    return invalid(format!(
                        "{}/{}: language shares sum to {sum}",
                        spec.country, group.label
                    ));
                }
                if group.languages.values().any(|s| *s <= 0.0) {
                    return invalid(format!(
                        "{}/{}: non-positive language share",
                        spec.country, group.label
                    ));
                }
                if group.volume < 0.0 || group.volume_overrides.values().any(|v| *v < 0.0) {
                    return invalid(format!(
                        "{}/{}: negative volume",
                        spec.country, group.label
                    ));
                }
            }
        }
        Ok(())
    }

    fn spec_for(&self, country: CountryCode) -> Option<&PopulationSpec> {
        self.countries.iter().find(|s| s.country == country)
    }

    fn restricted(&self, month: Month) -> bool {
        self.restriction.is_some_and(|r| r.contains(month))
    }

    /// A group's volume in a month after restriction scaling.
    pub fn effective_volume(&self, group: &GroupSpec, month: Month) -> f64 {
        let volume = group.scheduled_volume(month);
        if group.non_local && self.restricted(month) {
            volume * self.restriction_factor
        } else {
            volume
        }
    }

    /// Exact volume-weighted mixture of the group distributions; no sampling.
    pub fn expected_distribution(
        &self,
        country: CountryCode,
        month: Month,
    ) -> Result<LanguageDistribution, SynthError> {
        let spec = self
            .spec_for(country)
            .ok_or_else(|| SynthError::Invalid(format!("unknown country {country}")))?;
        let mut weighted: BTreeMap<LanguageCode, f64> = BTreeMap::new();
        let mut total = 0.0;
        for group in &spec.groups {
            let volume = self.effective_volume(group, month);
            if volume <= 0.0 {
                continue;
            }
            total += volume;
            for (language, share) in &group.languages {
                *weighted.entry(*language).or_insert(0.0) += volume * share;
            }
        }
        if total <= 0.0 {
            return Err(SynthError::ZeroVolume { country, month });
        }
        let shares: BTreeMap<LanguageCode, f64> = weighted
            .into_iter()
            .map(|(language, mass)| (language, mass / total))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        LanguageDistribution::from_shares(shares, total.round() as u64)
            .map_err(|e| SynthError::Invalid(e.to_string()))
    }

    /// HHI of the expected distribution.
    pub fn expected_hhi(&self, country: CountryCode, month: Month) -> Result<f64, SynthError> {
        Ok(diversity::hhi(&self.expected_distribution(country, month)?).value)
    }

    /// Ground-truth manifest: expected shares and HHI per cell.
    pub fn manifest(&self) -> Vec<ManifestCell> {
        let mut cells = Vec::new();
        for spec in &self.countries {
            for month in self.date_range.iter() {
                if let Ok(dist) = self.expected_distribution(spec.country, month) {
                    cells.push(ManifestCell {
                        country: spec.country,
                        month,
                        expected_hhi: diversity::hhi(&dist).value,
                        shares: dist.shares().collect(),
                    });
                }
            }
        }
        cells
    }

    /// Registry covering the scenario's countries.
    pub fn to_registry(&self) -> Result<CountryRegistry, SynthError> {
        let mut registry = CountryRegistry::new();
        for spec in &self.countries {
            registry.insert(spec.country, &spec.region)?;
        }
        Ok(registry)
    }

    /// Samples cell counts directly into a count table, without a record file.
    /// Uses the same per-cell streams as [`Scenario::write_corpus`], so both
    /// routes yield identical counts for a given seed.
    pub fn sample_table(&self) -> Result<CountTable, SynthError> {
        let mut table = CountTable::new();
        for spec in &self.countries {
            for month in self.date_range.iter() {
                if let Some((counts, _)) = self.sample_cell(spec.country, month)? {
                    for (language, count) in counts {
                        table.add_count(spec.country, month, language, count);
                    }
                }
            }
        }
        Ok(table)
    }

    /// Draws one cell's counts; returns the cell RNG positioned after the
    /// count draws so record attributes continue the same stream.
    #[allow(clippy::type_complexity)]
    fn sample_cell(
        &self,
        country: CountryCode,
        month: Month,
    ) -> Result<Option<(Vec<(LanguageCode, u64)>, ChaCha8Rng)>, SynthError> {
        let spec = self
            .spec_for(country)
            .ok_or_else(|| SynthError::Invalid(format!("unknown country {country}")))?;
        let total: f64 = spec
            .groups
            .iter()
            .map(|g| self.effective_volume(g, month))
            .sum();
        let n = total.round() as u64;
        if n == 0 {
            return Ok(None);
        }
        let dist = self.expected_distribution(country, month)?;
        let mut rng = cell_rng(self.seed, country, month);
        let counts = sample_multinomial(&mut rng, n, &dist);
        Ok(Some((counts, rng)))
    }

    /// Writes the record file (key/value encoding) for the whole scenario.
    pub fn write_corpus<W: Write>(&self, writer: &mut W) -> Result<u64, SynthError> {
        let mut written = 0;
        for spec in &self.countries {
            for month in self.date_range.iter() {
                let Some((counts, mut rng)) = self.sample_cell(spec.country, month)? else {
                    continue;
                };
                let month_start = NaiveDate::from_ymd_opt(
                    month.year(),
                    month.month_of_year() as u32,
                    1,
                )
                .expect("valid month start");
                let seconds = seconds_in_month(month);
                let mut seq = 0u64;
                for (language, count) in counts {
                    for _ in 0..count {
                        use rand::Rng;
                        let offset = rng.random_range(0..seconds);
                        let ts = month_start
                            .and_hms_opt(0, 0, 0)
                            .expect("midnight")
                            .and_utc()
                            + chrono::Duration::seconds(offset as i64);
                        let chars: u32 = rng.random_range(40..=280);
                        writeln!(
                            writer,
                            "id={country}-{ym}-{seq:06}\tts={ts}\tcountry={country}\tlang={language}\tchars={chars}",
                            country = spec.country,
                            ym = month,
                            ts = ts.format("%Y-%m-%dT%H:%M:%SZ"),
                        )?;
                        seq += 1;
                        written += 1;
                    }
                }
            }
        }
        Ok(written)
    }

    /// Writes the manifest as `country,month,language,expected_share,expected_hhi`.
    pub fn write_manifest<W: Write>(&self, writer: W) -> Result<(), SynthError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "country",
            "month",
            "language",
            "expected_share",
            "expected_hhi",
        ])?;
        for cell in self.manifest() {
            for (language, share) in &cell.shares {
                w.write_record([
                    cell.country.as_str(),
                    &cell.month.to_string(),
                    language.as_str(),
                    &format!("{share:.9}"),
                    &format!("{:.9}", cell.expected_hhi),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `corpus.records`, `manifest.csv`, and `registry.csv` into a
    /// directory.
    pub fn generate_to_dir(&self, dir: &Path) -> Result<GeneratedPaths, SynthError> {
        std::fs::create_dir_all(dir)?;
        let paths = GeneratedPaths {
            corpus: dir.join("corpus.records"),
            manifest: dir.join("manifest.csv"),
            registry: dir.join("registry.csv"),
        };
        let mut corpus = io::BufWriter::new(std::fs::File::create(&paths.corpus)?);
        self.write_corpus(&mut corpus)?;
        corpus.flush()?;
        self.write_manifest(std::fs::File::create(&paths.manifest)?)?;
        self.to_registry()?
            .write_csv(std::fs::File::create(&paths.registry)?)?;
        Ok(paths)
    }
}

/// Ground truth for one (country, month) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestCell {
    pub country: CountryCode,
    pub month: Month,
    pub expected_hhi: f64,
    pub shares: Vec<(LanguageCode, f64)>,
}

/// Files produced by [`Scenario::generate_to_dir`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedPaths {
    pub corpus: PathBuf,
    pub manifest: PathBuf,
    pub registry: PathBuf,
}

fn seconds_in_month(month: Month) -> u64 {
    let start = NaiveDate::from_ymd_opt(month.year(), month.month_of_year() as u32, 1)
        .expect("valid month");
    let next = month.succ();
    let end = NaiveDate::from_ymd_opt(next.year(), next.month_of_year() as u32, 1)
        .expect("valid month");
    (end - start).num_days() as u64 * 86_400
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-cell RNG so parallel or reordered generation never changes output.
fn cell_rng(seed: u64, country: CountryCode, month: Month) -> ChaCha8Rng {
    let code = country.as_str().as_bytes();
    let country_word =
        (u64::from(code[0]) << 16) | (u64::from(code[1]) << 8) | u64::from(code[2]);
    let month_index = (month.year() as i64 * 12 + month.month_of_year() as i64 - 1) as u64;
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed ^ country_word) ^ month_index))
}

/// Multinomial draw via sequential conditional binomials over the sorted
/// language list.
fn sample_multinomial(
    rng: &mut ChaCha8Rng,
    n: u64,
    dist: &LanguageDistribution,
) -> Vec<(LanguageCode, u64)> {
    let shares: Vec<(LanguageCode, f64)> = dist.shares().collect();
    let mut out = Vec::with_capacity(shares.len());
    let mut remaining = n;
    let mut remaining_share = 1.0;
    for (i, (language, share)) in shares.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let count = if i + 1 == shares.len() {
            remaining
        } else {
            let q = (share / remaining_share).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .expect("clamped probability")
                .sample(rng)
        };
        if count > 0 {
            out.push((*language, count));
        }
        remaining -= count;
        remaining_share -= share;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn country(c: &str) -> CountryCode {
        CountryCode::new(c).unwrap()
    }

    fn lang(l: &str) -> LanguageCode {
        LanguageCode::new(l).unwrap()
    }

    fn month(y: i32, m: u32) -> Month {
        Month::new(y, m).unwrap()
    }

    const SCENARIO: &str = r#"
seed = 42
date_range = { start = "2019-03", end = "2020-08" }
restriction = { start = "2020-03", end = "2020-08" }
restriction_factor = 0.0

[[country]]
code = "ERI"
region = "Africa, Sub"

[[country.group]]
label = "locals"
languages = { tir = 0.5806, eng = 0.4194 }
volume = 31700.0

[[country.group]]
label = "visitors"
non_local = true
languages = { eng = 1.0 }
volume = 18260.0
"#;

    #[test]
    fn parses_and_validates_toml() {
        let scenario = Scenario::from_toml_str(SCENARIO).unwrap();
        assert_eq!(scenario.seed, 42);
        assert_eq!(scenario.countries.len(), 1);
        assert_eq!(scenario.countries[0].groups[1].label, "visitors");
        assert!(scenario.countries[0].groups[1].non_local);
    }

    #[test]
    fn rejects_bad_scenarios() {
        let bad_shares = SCENARIO.replace("tir = 0.5806", "tir = 0.9");
        assert!(Scenario::from_toml_str(&bad_shares).is_err());
        let bad_factor = SCENARIO.replace("restriction_factor = 0.0", "restriction_factor = 1.5");
        assert!(Scenario::from_toml_str(&bad_factor).is_err());
        let bad_restriction =
            SCENARIO.replace("{ start = \"2020-03\", end = \"2020-08\" }\nrestriction_factor = 0.0",
                             "{ start = \"2020-03\", end = \"2020-12\" }\nrestriction_factor = 0.0");
        assert!(Scenario::from_toml_str(&bad_restriction).is_err());
    }

    #[test]
    fn single_group_expected_distribution_is_verbatim() {
        let scenario = Scenario::from_toml_str(SCENARIO).unwrap();
        // Restriction months zero out the visitors: locals verbatim.
        let dist = scenario
            .expected_distribution(country("ERI"), month(2020, 4))
            .unwrap();
        assert!((dist.share(lang("tir")) - 0.5806).abs() < 1e-12);
        assert!((dist.share(lang("eng")) - 0.4194).abs() < 1e-12);
    }

    #[test]
    fn two_equal_groups_with_disjoint_languages_split_evenly() {
        let text = r#"
seed = 1
date_range = { start = "2020-01", end = "2020-02" }

[[country]]
code = "XXA"
[[country.group]]
label = "a"
languages = { aaa = 1.0 }
volume = 500.0
[[country.group]]
label = "b"
languages = { bbb = 1.0 }
volume = 500.0
"#;
        let scenario = Scenario::from_toml_str(text).unwrap();
        let dist = scenario
            .expected_distribution(country("XXA"), month(2020, 1))
            .unwrap();
        assert_eq!(dist.share(lang("aaa")), 0.5);
        assert_eq!(dist.share(lang("bbb")), 0.5);
    }

    #[test]
    fn arbitrary_mixture_matches_weighted_sum() {
        let scenario = Scenario::from_toml_str(SCENARIO).unwrap();
        // Baseline month: 31700 locals + 18260 visitors.
        let dist = scenario
            .expected_distribution(country("ERI"), month(2019, 4))
            .unwrap();
        let total = 31700.0 + 18260.0;
        let expected_eng = (31700.0 * 0.4194 + 18260.0) / total;
        let expected_tir = (31700.0 * 0.5806) / total;
        assert!((dist.share(lang("eng")) - expected_eng).abs() < 1e-12);
        assert!((dist.share(lang("tir")) - expected_tir).abs() < 1e-12);
        // Tuned to the attribution targets: 63.16% baseline English.
        assert!((expected_eng - 0.6316).abs() < 5e-4);
    }

    #[test]
    fn manifest_hhi_equals_expected_distribution_hhi() {
        let scenario = Scenario::from_toml_str(SCENARIO).unwrap();
        for cell in scenario.manifest() {
            let expected = scenario
                .expected_hhi(cell.country, cell.month)
                .unwrap();
            assert_eq!(cell.expected_hhi, expected);
        }
    }

    #[test]
    fn same_seed_byte_identical_output() {
        let scenario = Scenario::from_toml_str(SCENARIO).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        scenario.write_corpus(&mut a).unwrap();
        scenario.write_corpus(&mut b).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b);

        let mut different = scenario.clone();
        different.seed = 43;
        let mut c = Vec::new();
        different.write_corpus(&mut c).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_counts_match_corpus_route() {
        let mut scenario = Scenario::from_toml_str(SCENARIO).unwrap();
        // Shrink for speed.
        scenario.date_range = MonthRange::new(month(2020, 1), month(2020, 2)).unwrap();
        scenario.restriction = None;
        let table = scenario.sample_table().unwrap();

        let mut corpus = Vec::new();
        scenario.write_corpus(&mut corpus).unwrap();
        let text = String::from_utf8(corpus).unwrap();
        let mut recount: BTreeMap<(String, String), u64> = BTreeMap::new();
        for line in text.lines() {
            let raw = crate::ingest::parse_kv_line(line).unwrap();
            *recount
                .entry((raw.ts[..7].to_string(), raw.lang.clone()))
                .or_insert(0) += 1;
        }
        for ((ym, l), n) in recount {
            let m: Month = ym.parse().unwrap();
            let cell = table.cell(country("ERI"), m).unwrap();
            assert_eq!(cell.count(lang(&l)), n);
        }
    }

    #[test]
    fn empirical_shares_converge_to_expected() {
        // Three volume tiers with shrinking tolerance.
        for (volume, tolerance) in [(500.0, 0.12), (5_000.0, 0.04), (50_000.0, 0.012)] {
            let text = format!(
                r#"
seed = 7
date_range = {{ start = "2020-01", end = "2020-01" }}

[[country]]
code = "XXB"
[[country.group]]
label = "mix"
languages = {{ aaa = 0.6, bbb = 0.3, ccc = 0.1 }}
volume = {volume}
"#
            );
            let scenario = Scenario::from_toml_str(&text).unwrap();
            let table = scenario.sample_table().unwrap();
            let dist = table
                .distribution(country("XXB"), &[month(2020, 1)])
                .unwrap();
            for (l, expected) in [("aaa", 0.6), ("bbb", 0.3), ("ccc", 0.1)] {
                assert!(
                    (dist.share(lang(l)) - expected).abs() < tolerance,
                    "volume {volume}: share {l} = {} vs {expected}",
                    dist.share(lang(l))
                );
            }
        }
    }

    #[test]
    fn zero_volume_cell_is_skipped() {
        let text = r#"
seed = 1
date_range = { start = "2020-01", end = "2020-02" }

[[country]]
code = "XXC"
[[country.group]]
label = "a"
languages = { aaa = 1.0 }
volume = 0.0
"#;
        let scenario = Scenario::from_toml_str(text).unwrap();
        let table = scenario.sample_table().unwrap();
        assert!(table.is_empty());
        assert!(matches!(
            scenario.expected_distribution(country("XXC"), month(2020, 1)),
            Err(SynthError::ZeroVolume { .. })
        ));
    }

    #[test]
    fn registry_covers_scenario_countries() {
        let scenario = Scenario::from_toml_str(SCENARIO).unwrap();
        let registry = scenario.to_registry().unwrap();
        assert_eq!(registry.region_of(country("ERI")), Some("Africa, Sub"));
    }

    #[test]
    fn volume_overrides_apply() {
        let text = r#"
seed = 1
date_range = { start = "2020-01", end = "2020-02" }

[[country]]
code = "XXD"
[[country.group]]
label = "a"
languages = { aaa = 0.5, bbb = 0.5 }
volume = 100.0
[country.group.volume_overrides]
"2020-02" = 9000.0
"#;
        let scenario = Scenario::from_toml_str(text).unwrap();
        let group = &scenario.countries[0].groups[0];
        assert_eq!(group.scheduled_volume(month(2020, 1)), 100.0);
        assert_eq!(group.scheduled_volume(month(2020, 2)), 9000.0);
        let table = scenario.sample_table().unwrap();
        assert_eq!(table.total(country("XXD"), month(2020, 2)), 9000);
    }
}
