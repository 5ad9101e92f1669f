//! Run configuration: one TOML file drives the whole pipeline.
//!
//! ```toml
//! [paths]
//! corpus = ["corpus.records"]
//! registry = "registry.csv"
//! demographics = "demographics.csv"   # optional
//! count_table = "out/count_table.csv" # optional; default <output_dir>/count_table.csv
//! output_dir = "out"
//!
//! [ingest]
//! min_chars = 40
//! drop_retweets = true
//! date_range = { start = "2018-07", end = "2020-08" }
//!
//! [windows.shift]
//! treatment = { start = "2020-03", end = "2020-08" }
//! baseline = { start = "2019-03", end = "2019-08" }
//!
//! [windows.did]
//! months_of_year = [7, 8, 9]
//! year_pre = 2018
//! year_mid = 2019
//! year_post = 2020
//!
//! [thresholds]
//! min_support = 500
//! attribution_threshold = 0.01
//! amplification_ratio = 5.0
//! alpha = 0.05
//!
//! [flags]
//! test_variant = "welch"          # or "pooled"
//! log_transform = false
//! multiple_comparison = "none"    # or "benjamini_hochberg"
//!
//! [bias]
//! exclude = ["USA", "CHN", "IND"]
//! ```
//!
//! Every section is optional; the defaults above apply.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use langscape::did::DidWindows;
use langscape::ingest;
use langscape::month::MonthRange;
use langscape::record::CountryCode;
use langscape::shift::WindowPair;
use langscape::stats::TestVariant;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    paths: PathsSection,
    ingest: IngestSection,
    windows: WindowsSection,
    thresholds: ThresholdsSection,
    flags: FlagsSection,
    bias: BiasSection,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub corpus: Vec<PathBuf>,
    pub registry: Option<PathBuf>,
    pub demographics: Option<PathBuf>,
    pub count_table: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct IngestSection {
    min_chars: u32,
    drop_retweets: bool,
    date_range: MonthRange,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            min_chars: ingest::DEFAULT_MIN_CHARS,
            drop_retweets: true,
            date_range: ingest::default_date_range(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct WindowsSection {
    shift: Option<ShiftWindowsSection>,
    did: Option<DidWindowsSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShiftWindowsSection {
    treatment: MonthRange,
    baseline: MonthRange,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DidWindowsSection {
    months_of_year: Vec<u8>,
    year_pre: i32,
    year_mid: i32,
    year_post: i32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ThresholdsSection {
    min_support: u64,
    attribution_threshold: f64,
    amplification_ratio: f64,
    alpha: f64,
}

impl Default for ThresholdsSection {
    fn default() -> Self {
        ThresholdsSection {
            min_support: langscape::aggregate::DEFAULT_MIN_SUPPORT,
            attribution_threshold: langscape::shift::DEFAULT_ATTRIBUTION_THRESHOLD,
            amplification_ratio: langscape::did::DEFAULT_AMPLIFICATION_RATIO,
            alpha: langscape::did::DEFAULT_ALPHA,
        }
    }
}

/// How to correct for multiple comparisons across countries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultipleComparison {
    /// Raw p-values, as in the source analyses.
    #[default]
    None,
    BenjaminiHochberg,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct FlagsSection {
    test_variant: TestVariant,
    log_transform: bool,
    multiple_comparison: MultipleComparison,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct BiasSection {
    exclude: Vec<CountryCode>,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: Vec<PathBuf>,
    pub registry: Option<PathBuf>,
    pub demographics: Option<PathBuf>,
    pub count_table: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub min_chars: u32,
    pub drop_retweets: bool,
    pub date_range: MonthRange,
    pub shift_windows: WindowPair,
    pub did_windows: DidWindows,
    pub min_support: u64,
    pub attribution_threshold: f64,
    pub amplification_ratio: f64,
    pub alpha: f64,
    pub test_variant: TestVariant,
    pub log_transform: bool,
    pub multiple_comparison: MultipleComparison,
    pub bias_exclusions: Vec<CountryCode>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_raw(RawConfig::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::PathNotFound(format!("config {}: {e}", path.display()))
        })?;
        let raw: RawConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let config = Self::from_raw(raw)?;
        config.check_input_paths()?;
        Ok(config)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let shift_windows = match raw.windows.shift {
            Some(section) => WindowPair::from_ranges(section.treatment, section.baseline)?,
            None => WindowPair::pandemic_default(),
        };
        let did_windows = match raw.windows.did {
            Some(section) => DidWindows::new(
                section.months_of_year,
                section.year_pre,
                section.year_mid,
                section.year_post,
            )?,
            None => DidWindows::pandemic_default(),
        };
        let t = raw.thresholds;
        if t.min_support == 0 {
            bail!("thresholds.min_support must be at least 1");
        }
        if !(0.0..=1.0).contains(&t.attribution_threshold) {
            bail!("thresholds.attribution_threshold must lie in [0, 1]");
        }
        if t.amplification_ratio < 1.0 {
            bail!("thresholds.amplification_ratio must be at least 1");
        }
        if !(0.0 < t.alpha && t.alpha < 1.0) {
            bail!("thresholds.alpha must lie in (0, 1)");
        }
        Ok(RunConfig {
            corpus: raw.paths.corpus,
            registry: raw.paths.registry,
            demographics: raw.paths.demographics,
            count_table: raw.paths.count_table,
            output_dir: raw.paths.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            min_chars: raw.ingest.min_chars,
            drop_retweets: raw.ingest.drop_retweets,
            date_range: raw.ingest.date_range,
            shift_windows,
            did_windows,
            min_support: t.min_support,
            attribution_threshold: t.attribution_threshold,
            amplification_ratio: t.amplification_ratio,
            alpha: t.alpha,
            test_variant: raw.flags.test_variant,
            log_transform: raw.flags.log_transform,
            multiple_comparison: raw.flags.multiple_comparison,
            bias_exclusions: raw.bias.exclude,
        })
    }

    /// Referenced input paths must resolve when the config is loaded.
    fn check_input_paths(&self) -> Result<()> {
        let mut missing = Vec::new();
        for path in &self.corpus {
            if !path.exists() {
                missing.push(path.clone());
            }
        }
        for path in [&self.registry, &self.demographics].into_iter().flatten() {
            if !path.exists() {
                missing.push(path.clone());
            }
        }
        if let Some(first) = missing.first() {
            return Err(CliError::PathNotFound(format!(
                "{} (and {} more)",
                first.display(),
                missing.len() - 1
            ))
            .into());
        }
        Ok(())
    }

    /// Where the serialized count table lives.
    pub fn count_table_path(&self) -> PathBuf {
        self.count_table
            .clone()
            .unwrap_or_else(|| self.output_dir.join("count_table.csv"))
    }
}
