//! Subcommand implementations.
//!
//! Commands write only inside the configured output directory, and identical
//! inputs plus identical config produce byte-identical bundles: all result
//! collections are keyed or sorted by country code, and per-country work is
//! parallelized with order-preserving collection.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use langscape::aggregate::CountTable;
use langscape::bias::{self, BiasReport, Demographics, MonthlyStability};
use langscape::did::{self, DidEntry, DidSummary};
use langscape::diversity::{self, HhiSeries};
use langscape::ingest::{IngestConfig, IngestStats, RecordStream};
use langscape::month::Month;
use langscape::record::CountryCode;
use langscape::registry::CountryRegistry;
use langscape::shift::{self, AttributionEntry, ShiftEntry, StabilityReport};
use langscape::stats::{self, TestResult};
use langscape::synth::{GeneratedPaths, Scenario};
use rayon::prelude::*;

use crate::config::{MultipleComparison, RunConfig};
use crate::CliError;

fn create_output(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| {
        format!("creating {}", path.display())
    })?))
}

fn load_registry(config: &RunConfig) -> Result<CountryRegistry> {
    let path = config
        .registry
        .as_ref()
        .ok_or_else(|| CliError::PathNotFound("paths.registry not configured".to_string()))?;
    Ok(CountryRegistry::read_csv_path(path)?)
}

fn load_table(config: &RunConfig) -> Result<CountTable> {
    let path = config.count_table_path();
    if !path.exists() {
        return Err(CliError::PathNotFound(path.display().to_string()).into());
    }
    Ok(CountTable::read_csv_path(&path)?)
}

fn load_demographics(config: &RunConfig) -> Result<Option<Demographics>> {
    match &config.demographics {
        Some(path) => Ok(Some(Demographics::read_csv_path(path)?)),
        None => Ok(None),
    }
}

// --- ingest -----------------------------------------------------------------

pub struct IngestOutcome {
    pub stats: IngestStats,
    pub table_path: PathBuf,
}

/// Streams every corpus file through validation into one merged count table,
/// written with the ingest statistics into the output directory.
pub fn cmd_ingest(config: &RunConfig) -> Result<IngestOutcome> {
    if config.corpus.is_empty() {
        return Err(CliError::PathNotFound("paths.corpus is empty".to_string()).into());
    }
    let registry = load_registry(config)?;
    let ingest_config = IngestConfig {
        min_chars: config.min_chars,
        drop_retweets: config.drop_retweets,
        date_range: config.date_range,
        registry,
    };

    // Independent streams per file, merged afterwards.
    let shards: Vec<Result<(CountTable, IngestStats)>> = config
        .corpus
        .par_iter()
        .map(|path| {
            let mut stream = RecordStream::open(path, &ingest_config)
                .map_err(|e| CliError::PathNotFound(format!("{}: {e}", path.display())))?;
            let mut table = CountTable::new();
            for record in stream.by_ref() {
                match record {
                    Ok(record) => table.accumulate(&record),
                    // I/O failure: the stream has flagged its stats incomplete;
                    // keep the partial table so the stats file reflects it.
                    Err(_) => break,
                }
            }
            Ok((table, stream.into_stats()))
        })
        .collect();

    let mut table = CountTable::new();
    let mut stats = IngestStats::default();
    for shard in shards {
        let (shard_table, shard_stats) = shard?;
        table.merge(shard_table);
        stats.merge(&shard_stats);
    }

    let table_path = config.output_dir.join("count_table.csv");
    std::fs::create_dir_all(&config.output_dir)?;
    table.write_csv_path(&table_path)?;
    let mut w = create_output(&config.output_dir, "ingest_stats.txt")?;
    write_ingest_stats(&mut w, &stats)?;
    w.flush()?;

    if stats.incomplete {
        return Err(CliError::IngestIncomplete(format!(
            "partial stats written to {}",
            config.output_dir.join("ingest_stats.txt").display()
        ))
        .into());
    }
    Ok(IngestOutcome { stats, table_path })
}

fn write_ingest_stats<W: Write>(w: &mut W, stats: &IngestStats) -> Result<()> {
    writeln!(w, "lines={}", stats.lines)?;
    writeln!(w, "accepted={}", stats.accepted)?;
    writeln!(w, "malformed_line={}", stats.malformed_line)?;
    writeln!(w, "unknown_country={}", stats.unknown_country)?;
    writeln!(w, "unknown_language={}", stats.unknown_language)?;
    writeln!(w, "too_short={}", stats.too_short)?;
    writeln!(w, "out_of_range={}", stats.out_of_range)?;
    writeln!(w, "retweet_dropped={}", stats.retweet_dropped)?;
    writeln!(w, "incomplete={}", stats.incomplete)?;
    Ok(())
}

// --- per-country analysis pieces ---------------------------------------------

/// One stage's per-country failures, recorded instead of aborting the run.
pub type CountryErrors = Vec<(String, &'static str, String)>;

pub struct ShiftOutcome {
    pub entries: Vec<ShiftEntry>,
    pub errors: CountryErrors,
}

/// Shift detection across every country in the table, sorted by country code.
pub fn run_shift(table: &CountTable, config: &RunConfig) -> ShiftOutcome {
    let countries = table.countries();
    let results: Vec<(CountryCode, Result<ShiftEntry, shift::ShiftError>)> = countries
        .par_iter()
        .map(|country| {
            (
                *country,
                shift::detect_shift(
                    table,
                    *country,
                    &config.shift_windows,
                    config.min_support,
                    config.test_variant,
                ),
            )
        })
        .collect();
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (country, result) in results {
        match result {
            Ok(entry) => entries.push(entry),
            Err(e) => errors.push((country.to_string(), "shift", e.to_string())),
        }
    }
    if config.multiple_comparison == MultipleComparison::BenjaminiHochberg {
        let ps: Vec<f64> = entries.iter().map(|e| e.test.p_value).collect();
        for (entry, adjusted) in entries.iter_mut().zip(stats::benjamini_hochberg(&ps)) {
            entry.test.p_value = adjusted;
            entry.test.class = stats::classify(adjusted);
        }
    }
    ShiftOutcome { entries, errors }
}

pub struct AttributionOutcome {
    pub entries: Vec<AttributionEntry>,
    pub errors: CountryErrors,
}

/// Per-language attribution for the countries whose shift is significant.
pub fn run_attribution(
    table: &CountTable,
    config: &RunConfig,
    shift_entries: &[ShiftEntry],
) -> AttributionOutcome {
    let significant: Vec<CountryCode> = shift_entries
        .iter()
        .filter(|e| e.test.class.is_significant())
        .map(|e| e.country)
        .collect();
    let results: Vec<(CountryCode, Result<Vec<AttributionEntry>, shift::ShiftError>)> =
        significant
            .par_iter()
            .map(|country| {
                (
                    *country,
                    shift::attribute_languages(
                        table,
                        *country,
                        &config.shift_windows,
                        config.attribution_threshold,
                        config.min_support,
                        config.test_variant,
                    ),
                )
            })
            .collect();
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (country, result) in results {
        match result {
            Ok(list) => entries.extend(list),
            Err(e) => errors.push((country.to_string(), "attribution", e.to_string())),
        }
    }
    AttributionOutcome { entries, errors }
}

pub struct DidOutcome {
    pub entries: Vec<DidEntry>,
    pub summary: Option<DidSummary>,
    pub errors: CountryErrors,
}

/// Difference-in-differences over every country in the table.
pub fn run_did(table: &CountTable, config: &RunConfig) -> DidOutcome {
    let countries = table.countries();
    let results: Vec<(CountryCode, Result<DidEntry, did::DidError>)> = countries
        .par_iter()
        .map(|country| {
            (
                *country,
                did::did_analyze(
                    table,
                    *country,
                    &config.did_windows,
                    config.min_support,
                    config.alpha,
                    config.amplification_ratio,
                    config.test_variant,
                ),
            )
        })
        .collect();
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (country, result) in results {
        match result {
            Ok(entry) => entries.push(entry),
            Err(e) => errors.push((country.to_string(), "did", e.to_string())),
        }
    }
    if config.multiple_comparison == MultipleComparison::BenjaminiHochberg {
        let pb: Vec<f64> = entries.iter().map(|e| e.p_baseline()).collect();
        let pc: Vec<f64> = entries.iter().map(|e| e.p_covid()).collect();
        let adj_b = stats::benjamini_hochberg(&pb);
        let adj_c = stats::benjamini_hochberg(&pc);
        for ((entry, pb), pc) in entries.iter_mut().zip(adj_b).zip(adj_c) {
            entry.test_baseline.p_value = pb;
            entry.test_baseline.class = stats::classify(pb);
            entry.test_covid.p_value = pc;
            entry.test_covid.class = stats::classify(pc);
            entry.class = did::classify_did(pb, pc, config.alpha, config.amplification_ratio);
        }
    }
    let summary = did::did_summary(&entries, config.alpha).ok();
    DidOutcome {
        entries,
        summary,
        errors,
    }
}

pub struct StabilityOutcome {
    pub volume: Option<StabilityReport>,
    pub hhi: Vec<(CountryCode, TestResult)>,
    pub errors: CountryErrors,
}

/// Volume-share stability per region and country, plus per-country HHI
/// stability over the full period.
pub fn run_stability(
    table: &CountTable,
    registry: &CountryRegistry,
    config: &RunConfig,
) -> StabilityOutcome {
    let mut errors = Vec::new();
    let volume = match shift::stability_screen(table, registry, config.test_variant) {
        Ok(report) => Some(report),
        Err(e) => {
            errors.push(("*".to_string(), "stability_screen", e.to_string()));
            None
        }
    };
    let countries = table.countries();
    let results: Vec<(CountryCode, Result<TestResult, shift::ShiftError>)> = countries
        .par_iter()
        .map(|country| {
            (
                *country,
                shift::diversity_stability(
                    table,
                    *country,
                    config.min_support,
                    config.test_variant,
                ),
            )
        })
        .collect();
    let mut hhi = Vec::new();
    for (country, result) in results {
        match result {
            Ok(test) => hhi.push((country, test)),
            Err(e) => errors.push((country.to_string(), "diversity_stability", e.to_string())),
        }
    }
    StabilityOutcome {
        volume,
        hhi,
        errors,
    }
}

pub struct BiasOutcome {
    pub report: BiasReport,
    pub monthly: Vec<MonthlyStability>,
    pub errors: CountryErrors,
}

/// Demographic correlations with the configured exclusions, plus the
/// month-by-month correlation stability check per covariate.
pub fn run_bias(
    table: &CountTable,
    demographics: &Demographics,
    config: &RunConfig,
) -> Result<BiasOutcome> {
    let volumes = bias::volume_vector(table);
    let report = bias::correlate_demographics(
        &volumes,
        demographics,
        &config.bias_exclusions,
        config.log_transform,
    )?;
    let mut monthly = Vec::new();
    let mut errors = Vec::new();
    for covariate in bias::Covariate::ALL {
        match bias::monthly_correlation_stability(
            table,
            demographics,
            covariate,
            &config.bias_exclusions,
            config.test_variant,
        ) {
            Ok(result) => monthly.push(result),
            Err(e) => errors.push(("*".to_string(), covariate.as_str(), e.to_string())),
        }
    }
    Ok(BiasOutcome {
        report,
        monthly,
        errors,
    })
}

// --- bundle writers -----------------------------------------------------------

fn write_stability_csvs(out: &StabilityOutcome, dir: &Path) -> Result<()> {
    if let Some(report) = &out.volume {
        let mut w = csv::Writer::from_writer(create_output(dir, "stability_regions.csv")?);
        w.write_record(["region", "p", "class"])?;
        for (region, test) in &report.regions {
            w.write_record([
                region.as_str(),
                &format!("{:e}", test.p_value),
                test.class.as_str(),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_writer(create_output(dir, "stability_countries.csv")?);
        w.write_record(["country", "p", "class"])?;
        for (country, test) in &report.countries {
            w.write_record([
                country.as_str(),
                &format!("{:e}", test.p_value),
                test.class.as_str(),
            ])?;
        }
        w.flush()?;
    }
    let mut w = csv::Writer::from_writer(create_output(dir, "stability_hhi.csv")?);
    w.write_record(["country", "p", "class"])?;
    for (country, test) in &out.hhi {
        w.write_record([
            country.as_str(),
            &format!("{:e}", test.p_value),
            test.class.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_did_outputs(out: &DidOutcome, dir: &Path) -> Result<()> {
    let mut w = create_output(dir, "did_report.csv")?;
    did::write_report_csv(&out.entries, &mut w)?;
    w.flush()?;
    let mut w = create_output(dir, "did_summary.txt")?;
    match &out.summary {
        Some(summary) => {
            writeln!(w, "created={}", summary.created)?;
            writeln!(w, "amplified={}", summary.amplified)?;
            writeln!(w, "pre_existing={}", summary.pre_existing)?;
            writeln!(w, "not_significant={}", summary.not_significant)?;
            writeln!(
                w,
                "covid_attributed_fraction={:.6}",
                summary.covid_attributed_fraction
            )?;
        }
        None => writeln!(w, "no_significant_countries=true")?,
    }
    w.flush()?;
    Ok(())
}

fn write_bias_outputs(out: &BiasOutcome, dir: &Path) -> Result<()> {
    // Key/value text view alongside the tabular file.
    let mut w = create_output(dir, "bias_report.txt")?;
    for (covariate, pair) in &out.report.covariates {
        writeln!(w, "{covariate}.r_all={:.6}", pair.without_exclusions.r)?;
        writeln!(w, "{covariate}.n_all={}", pair.without_exclusions.n)?;
        writeln!(w, "{covariate}.r_excluded={:.6}", pair.with_exclusions.r)?;
        writeln!(w, "{covariate}.n_excluded={}", pair.with_exclusions.n)?;
        let suggested = out.report.suggested_outliers[covariate]
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(w, "{covariate}.suggested_outliers={suggested}")?;
    }
    let excluded = out
        .report
        .excluded_countries
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    writeln!(w, "excluded={excluded}")?;
    w.flush()?;

    let mut w = csv::Writer::from_writer(create_output(dir, "bias_report.csv")?);
    w.write_record([
        "covariate",
        "r_all",
        "n_all",
        "r_excluded",
        "n_excluded",
        "excluded",
        "suggested_outliers",
    ])?;
    for (covariate, pair) in &out.report.covariates {
        let excluded = out
            .report
            .excluded_countries
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let suggested = out.report.suggested_outliers[covariate]
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        w.write_record([
            covariate.as_str(),
            &format!("{:.6}", pair.without_exclusions.r),
            &pair.without_exclusions.n.to_string(),
            &format!("{:.6}", pair.with_exclusions.r),
            &pair.with_exclusions.n.to_string(),
            &excluded,
            &suggested,
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create_output(dir, "bias_monthly_r.csv")?);
    w.write_record(["covariate", "month", "r"])?;
    for monthly in &out.monthly {
        for (month, r) in &monthly.r_by_month {
            w.write_record([
                monthly.covariate.as_str(),
                &month.to_string(),
                &format!("{r:.6}"),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create_output(dir, "bias_stability.csv")?);
    w.write_record(["covariate", "p", "class"])?;
    for monthly in &out.monthly {
        w.write_record([
            monthly.covariate.as_str(),
            &format!("{:e}", monthly.split_test.p_value),
            monthly.split_test.class.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_errors_csv(errors: &CountryErrors, dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create_output(dir, "errors.csv")?);
    w.write_record(["country", "stage", "error"])?;
    for (country, stage, message) in errors {
        w.write_record([country.as_str(), stage, message.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_thin_cells_csv(table: &CountTable, min_support: u64, dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create_output(dir, "thin_cells.csv")?);
    w.write_record(["country", "month", "total"])?;
    for country in table.countries() {
        for month in table.thin_months(country, min_support) {
            w.write_record([
                country.as_str(),
                &month.to_string(),
                &table.total(country, month).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

// --- top-level commands ---------------------------------------------------------

/// Everything the full bundle needs, assembled in one pass.
pub struct AnalysisBundle {
    pub table: CountTable,
    pub series: Vec<HhiSeries>,
    pub stability: StabilityOutcome,
    pub shift: ShiftOutcome,
    pub attribution: AttributionOutcome,
    pub did: DidOutcome,
    pub bias: Option<BiasOutcome>,
    /// Bundle-level failures (e.g. bias with too little overlap), recorded
    /// instead of aborting the run.
    pub errors: CountryErrors,
}

pub fn run_analysis(config: &RunConfig) -> Result<AnalysisBundle> {
    let table = load_table(config)?;
    let registry = load_registry(config)?;
    let demographics = load_demographics(config)?;

    let series: Vec<HhiSeries> = table
        .countries()
        .par_iter()
        .map(|country| {
            diversity::hhi_series(&table, *country, config.min_support)
                .expect("listed country has data")
        })
        .collect();
    let stability = run_stability(&table, &registry, config);
    let shift = run_shift(&table, config);
    let attribution = run_attribution(&table, config, &shift.entries);
    let did = run_did(&table, config);
    let mut errors = CountryErrors::new();
    let bias = match &demographics {
        Some(demographics) => match run_bias(&table, demographics, config) {
            Ok(outcome) => Some(outcome),
            Err(e) => {
                errors.push(("*".to_string(), "bias", e.to_string()));
                None
            }
        },
        None => None,
    };
    Ok(AnalysisBundle {
        table,
        series,
        stability,
        shift,
        attribution,
        did,
        bias,
        errors,
    })
}

/// Full deterministic report bundle: diversity exports, stability screens,
/// shift + attribution, DiD, bias (when demographics are configured),
/// choropleths, thin-cell and error records, and the human-readable report.
pub fn cmd_analyze(config: &RunConfig) -> Result<()> {
    let bundle = run_analysis(config)?;
    let dir = &config.output_dir;

    let mut w = create_output(dir, "diversity_series.csv")?;
    diversity::write_series_csv(&bundle.series, &mut w)?;
    w.flush()?;
    let months = bundle.table.months();
    let mut w = create_output(dir, "choropleth_hhi.csv")?;
    diversity::write_choropleth_csv(&bundle.table, &months, &mut w)?;
    w.flush()?;

    write_stability_csvs(&bundle.stability, dir)?;

    let mut w = create_output(dir, "shift_report.csv")?;
    shift::write_report_csv(&bundle.shift.entries, &mut w)?;
    w.flush()?;
    let mut w = create_output(dir, "choropleth_shift.csv")?;
    shift::write_choropleth_csv(&bundle.shift.entries, &mut w)?;
    w.flush()?;
    let mut w = create_output(dir, "attribution.csv")?;
    shift::write_attribution_csv(&bundle.attribution.entries, &mut w)?;
    w.flush()?;

    write_did_outputs(&bundle.did, dir)?;

    if let Some(bias_outcome) = &bundle.bias {
        write_bias_outputs(bias_outcome, dir)?;
    }

    write_thin_cells_csv(&bundle.table, config.min_support, dir)?;

    let mut errors = bundle.errors.clone();
    errors.extend(bundle.stability.errors.iter().cloned());
    errors.extend(bundle.shift.errors.iter().cloned());
    errors.extend(bundle.attribution.errors.iter().cloned());
    errors.extend(bundle.did.errors.iter().cloned());
    if let Some(bias_outcome) = &bundle.bias {
        errors.extend(bias_outcome.errors.iter().cloned());
    }
    errors.sort();
    write_errors_csv(&errors, dir)?;

    let text = crate::report::render(&bundle, config);
    let mut w = create_output(dir, "report.txt")?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn cmd_shift(config: &RunConfig) -> Result<()> {
    let table = load_table(config)?;
    let out = run_shift(&table, config);
    let dir = &config.output_dir;
    let mut w = create_output(dir, "shift_report.csv")?;
    shift::write_report_csv(&out.entries, &mut w)?;
    w.flush()?;
    let mut w = create_output(dir, "choropleth_shift.csv")?;
    shift::write_choropleth_csv(&out.entries, &mut w)?;
    w.flush()?;
    write_errors_csv(&out.errors, dir)?;
    Ok(())
}

pub fn cmd_attribute(config: &RunConfig) -> Result<()> {
    let table = load_table(config)?;
    let shift_out = run_shift(&table, config);
    let out = run_attribution(&table, config, &shift_out.entries);
    let dir = &config.output_dir;
    let mut w = create_output(dir, "attribution.csv")?;
    shift::write_attribution_csv(&out.entries, &mut w)?;
    w.flush()?;
    write_errors_csv(&out.errors, dir)?;
    Ok(())
}

pub fn cmd_did(config: &RunConfig) -> Result<()> {
    let table = load_table(config)?;
    let out = run_did(&table, config);
    write_did_outputs(&out, &config.output_dir)?;
    write_errors_csv(&out.errors, &config.output_dir)?;
    Ok(())
}

pub fn cmd_bias(config: &RunConfig) -> Result<()> {
    let table = load_table(config)?;
    let demographics = load_demographics(config)?.ok_or_else(|| {
        CliError::PathNotFound("paths.demographics not configured".to_string())
    })?;
    let out = run_bias(&table, &demographics, config)?;
    write_bias_outputs(&out, &config.output_dir)?;
    write_errors_csv(&out.errors, &config.output_dir)?;
    Ok(())
}

pub fn cmd_stability(config: &RunConfig) -> Result<()> {
    let table = load_table(config)?;
    let registry = load_registry(config)?;
    let out = run_stability(&table, &registry, config);
    write_stability_csvs(&out, &config.output_dir)?;
    write_errors_csv(&out.errors, &config.output_dir)?;
    Ok(())
}

/// Generates `corpus.records`, `manifest.csv`, and `registry.csv` from a
/// scenario file into the output directory.
pub fn cmd_synth(
    scenario_path: &Path,
    output_dir: &Path,
    seed_override: Option<u64>,
) -> Result<GeneratedPaths> {
    if !scenario_path.exists() {
        return Err(CliError::PathNotFound(scenario_path.display().to_string()).into());
    }
    let mut scenario = Scenario::from_toml_path(scenario_path)?;
    if let Some(seed) = seed_override {
        scenario.seed = seed;
    }
    Ok(scenario.generate_to_dir(output_dir)?)
}

/// Renders the human-readable report for an analyzed count table and writes
/// it to `report.txt`; returns the text for printing.
pub fn cmd_report(config: &RunConfig) -> Result<String> {
    let bundle = run_analysis(config)?;
    let text = crate::report::render(&bundle, config);
    let mut w = create_output(&config.output_dir, "report.txt")?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(text)
}

// Re-exported for the report renderer.
pub(crate) fn pooled_hhi(table: &CountTable, country: CountryCode) -> Option<(f64, u64)> {
    let months: Vec<Month> = table.months_for(country);
    diversity::hhi_baseline(table, country, &months)
        .ok()
        .map(|value| (value.value, value.support_count))
}
