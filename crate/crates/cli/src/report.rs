//! Courtesy text view of an analysis bundle, laid out as side-by-side tables.
//! The machine-readable CSV files are the contract; this is for reading.

use std::fmt::Write;

use langscape::did::DidClass;

use crate::commands::{pooled_hhi, AnalysisBundle};
use crate::config::RunConfig;

fn rule(out: &mut String, title: &str) {
    let _ = writeln!(out, "\n== {title} ==");
}

fn pct(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

pub fn render(bundle: &AnalysisBundle, config: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "langscape analysis: {} countries, {} months, {} records",
        bundle.table.countries().len(),
        bundle.table.months().len(),
        bundle.table.grand_total()
    );

    if let Some(report) = &bundle.stability.volume {
        rule(&mut out, "Regional volume stability (first vs second half)");
        let _ = writeln!(out, "{:<24} {:>12}  class", "region", "p");
        for (region, test) in &report.regions {
            let _ = writeln!(
                out,
                "{:<24} {:>12.4e}  {}",
                region, test.p_value, test.class
            );
        }
    }

    rule(&mut out, "Linguistic diversity (pooled HHI over all months)");
    let _ = writeln!(out, "{:<8} {:>8}  {:>12}", "country", "hhi", "support");
    for country in bundle.table.countries() {
        if let Some((value, support)) = pooled_hhi(&bundle.table, country) {
            let _ = writeln!(out, "{:<8} {:>8.3} {:>12}", country, value, support);
        }
    }

    rule(
        &mut out,
        "Shift detection (treatment vs seasonally-aligned baseline)",
    );
    let _ = writeln!(
        out,
        "{:<8} {:>12}  {:<20} {:<18} {:>9} {:>9}",
        "country", "p", "class", "direction", "hhi_base", "hhi_treat"
    );
    for entry in &bundle.shift.entries {
        let _ = writeln!(
            out,
            "{:<8} {:>12.4e}  {:<20} {:<18} {:>9.3} {:>9.3}",
            entry.country,
            entry.test.p_value,
            entry.test.class.to_string(),
            entry.direction.to_string(),
            entry.mean_hhi_baseline,
            entry.mean_hhi_treatment
        );
    }

    if !bundle.attribution.entries.is_empty() {
        rule(
            &mut out,
            "Attribution (languages above the baseline share threshold)",
        );
        let _ = writeln!(
            out,
            "{:<8} {:<9} {:>8} {:>8}  {:>12}",
            "country", "language", "normal", "covid", "p"
        );
        for entry in &bundle.attribution.entries {
            let _ = writeln!(
                out,
                "{:<8} {:<9} {:>8} {:>8}  {:>12.4e}",
                entry.country,
                entry.language,
                pct(entry.baseline_share),
                pct(entry.treatment_share),
                entry.test.p_value
            );
        }
    }

    rule(&mut out, "Difference-in-differences");
    let _ = writeln!(
        out,
        "{:<8} {:>12} {:>12}  class",
        "country", "p_baseline", "p_covid"
    );
    for entry in &bundle.did.entries {
        let _ = writeln!(
            out,
            "{:<8} {:>12.4e} {:>12.4e}  {}{}",
            entry.country,
            entry.p_baseline(),
            entry.p_covid(),
            entry.class,
            if entry.narrowed { " (narrowed)" } else { "" }
        );
    }
    match &bundle.did.summary {
        Some(summary) => {
            let _ = writeln!(
                out,
                "summary: created={} amplified={} pre_existing={} not_significant={} covid_attributed={}",
                summary.created,
                summary.amplified,
                summary.pre_existing,
                summary.not_significant,
                pct(summary.covid_attributed_fraction)
            );
        }
        None => {
            let _ = writeln!(out, "summary: no significant countries");
        }
    }

    if let Some(bias) = &bundle.bias {
        rule(&mut out, "Demographic bias correlations");
        let _ = writeln!(
            out,
            "{:<20} {:>8} {:>6} {:>10} {:>6}",
            "covariate", "r_all", "n", "r_excl", "n"
        );
        for (covariate, pair) in &bias.report.covariates {
            let _ = writeln!(
                out,
                "{:<20} {:>8.3} {:>6} {:>10.3} {:>6}",
                covariate,
                pair.without_exclusions.r,
                pair.without_exclusions.n,
                pair.with_exclusions.r,
                pair.with_exclusions.n
            );
        }
        if !bias.report.excluded_countries.is_empty() {
            let excluded: Vec<String> = bias
                .report
                .excluded_countries
                .iter()
                .map(|c| c.to_string())
                .collect();
            let _ = writeln!(out, "excluded: {}", excluded.join(", "));
        }
        for monthly in &bias.monthly {
            let _ = writeln!(
                out,
                "monthly r stability ({}): p={:.4e} {}",
                monthly.covariate, monthly.split_test.p_value, monthly.split_test.class
            );
        }
    }

    let thin: usize = bundle
        .table
        .countries()
        .iter()
        .map(|c| bundle.table.thin_months(*c, config.min_support).len())
        .sum();
    if thin > 0 {
        let _ = writeln!(
            out,
            "\nthin cells excluded from tests (support < {}): {thin}",
            config.min_support
        );
    }

    let not_significant = bundle
        .did
        .entries
        .iter()
        .filter(|e| e.class == DidClass::NotSignificant)
        .count();
    let _ = writeln!(
        out,
        "\ncountries analyzed: shift={} did={} (did not significant: {})",
        bundle.shift.entries.len(),
        bundle.did.entries.len(),
        not_significant
    );
    out
}
