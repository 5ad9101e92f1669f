//! Property tests for the aggregation, diversity, and statistics invariants.

use std::collections::BTreeMap;

use langscape::aggregate::{CountTable, LanguageDistribution, SHARE_SUM_TOLERANCE};
use langscape::diversity::hhi;
use langscape::month::Month;
use langscape::record::{CountryCode, LanguageCode};
use langscape::stats;
use proptest::prelude::*;

fn country(c: &str) -> CountryCode {
    CountryCode::new(c).unwrap()
}

fn language(i: usize) -> LanguageCode {
    let name = format!(
        "{}{}{}",
        (b'a' + (i / 676) as u8 % 26) as char,
        (b'a' + (i / 26) as u8 % 26) as char,
        (b'a' + (i % 26) as u8) as char
    );
    LanguageCode::new(&name).unwrap()
}

/// (country index, month offset, language index, count)
type RawCell = (usize, i64, usize, u64);

fn arb_cells() -> impl Strategy<Value = Vec<RawCell>> {
    prop::collection::vec(
        (0..4usize, 0..12i64, 0..6usize, 1..500u64),
        0..40,
    )
}

fn build_table(cells: &[RawCell]) -> CountTable {
    let countries = ["AAA", "BBB", "CCC", "DDD"];
    let mut table = CountTable::new();
    for (c, m, l, n) in cells {
        table.add_count(
            country(countries[*c]),
            Month::new(2019, 1).unwrap().offset(*m),
            language(*l),
            *n,
        );
    }
    table
}

proptest! {
    #[test]
    fn merge_is_commutative_and_associative(
        a in arb_cells(),
        b in arb_cells(),
        c in arb_cells(),
    ) {
        let (ta, tb, tc) = (build_table(&a), build_table(&b), build_table(&c));

        let mut ab = ta.clone();
        ab.merge(tb.clone());
        let mut ba = tb.clone();
        ba.merge(ta.clone());
        prop_assert_eq!(&ab, &ba);

        // (a + b) + c == a + (b + c)
        let mut ab_c = ab.clone();
        ab_c.merge(tc.clone());
        let mut bc = tb.clone();
        bc.merge(tc.clone());
        let mut a_bc = ta.clone();
        a_bc.merge(bc);
        prop_assert_eq!(&ab_c, &a_bc);

        // Empty identity.
        let mut with_empty = ta.clone();
        with_empty.merge(CountTable::new());
        prop_assert_eq!(&with_empty, &ta);
    }

    #[test]
    fn table_matches_brute_force_tally(cells in arb_cells()) {
        let table = build_table(&cells);
        // Independent nested tally.
        let countries = ["AAA", "BBB", "CCC", "DDD"];
        let mut tally: BTreeMap<(String, String, usize), u64> = BTreeMap::new();
        for (c, m, l, n) in &cells {
            let month = Month::new(2019, 1).unwrap().offset(*m);
            *tally
                .entry((countries[*c].to_string(), month.to_string(), *l))
                .or_insert(0) += n;
        }
        let mut listed = 0usize;
        for ((c, m, l), n) in &tally {
            let month: Month = m.parse().unwrap();
            let cell = table.cell(country(c), month).unwrap();
            prop_assert_eq!(cell.count(language(*l)), *n);
            listed += 1;
        }
        let stored: usize = table
            .countries()
            .iter()
            .map(|c| {
                table
                    .months_for(*c)
                    .iter()
                    .map(|m| table.cell(*c, *m).unwrap().counts().count())
                    .sum::<usize>()
            })
            .sum();
        prop_assert_eq!(stored, listed);
    }

    #[test]
    fn distribution_shares_sum_to_one(cells in arb_cells()) {
        let table = build_table(&cells);
        for c in table.countries() {
            let months = table.months_for(c);
            let dist = table.distribution(c, &months).unwrap();
            let sum: f64 = dist.shares().map(|(_, s)| s).sum();
            prop_assert!((sum - 1.0).abs() < SHARE_SUM_TOLERANCE);
            // Every language with a nonzero count appears.
            for m in &months {
                for (l, n) in table.cell(c, *m).unwrap().counts() {
                    prop_assert!(n == 0 || dist.share(l) > 0.0);
                }
            }
        }
    }

    #[test]
    fn merge_then_distribution_equals_pooled_months(
        a in arb_cells(),
        b in arb_cells(),
    ) {
        // Pooling across shards commutes with pooling across months.
        let (ta, tb) = (build_table(&a), build_table(&b));
        let mut merged = ta.clone();
        merged.merge(tb.clone());
        for c in merged.countries() {
            let months = merged.months_for(c);
            let from_merged = merged.distribution(c, &months).unwrap();
            // Manually pool counts from both shards.
            let mut pooled: BTreeMap<LanguageCode, u64> = BTreeMap::new();
            for t in [&ta, &tb] {
                for m in t.months_for(c) {
                    for (l, n) in t.cell(c, m).unwrap().counts() {
                        *pooled.entry(l).or_insert(0) += n;
                    }
                }
            }
            let direct = LanguageDistribution::from_counts(pooled).unwrap();
            prop_assert_eq!(from_merged, direct);
        }
    }

    #[test]
    fn hhi_respects_bounds(shares in prop::collection::vec(1e-6..1.0f64, 1..60)) {
        let total: f64 = shares.iter().sum();
        let normalized: BTreeMap<LanguageCode, f64> = shares
            .iter()
            .enumerate()
            .map(|(i, s)| (language(i), s / total))
            .collect();
        let k = normalized.len();
        let dist = LanguageDistribution::from_shares(normalized, 100).unwrap();
        let value = hhi(&dist).value;
        prop_assert!(value <= 1.0 + 1e-12);
        prop_assert!(value >= 1.0 / k as f64 - 1e-12);
    }

    #[test]
    fn welch_swap_negates_t_preserves_p(
        a in prop::collection::vec(-50.0..50.0f64, 2..12),
        b in prop::collection::vec(-50.0..50.0f64, 2..12),
    ) {
        let ab = stats::welch_t_test(&a, &b).unwrap();
        let ba = stats::welch_t_test(&b, &a).unwrap();
        prop_assert_eq!(ab.p_value, ba.p_value);
        prop_assert_eq!(ab.t_statistic, -ba.t_statistic);
        prop_assert_eq!(ab.degrees_of_freedom, ba.degrees_of_freedom);
    }

    #[test]
    fn classify_is_monotone(p1 in 0.0..1.0f64, p2 in 0.0..1.0f64) {
        let rank = |class: stats::SignificanceClass| match class {
            stats::SignificanceClass::HighlySignificant => 0,
            stats::SignificanceClass::VerySignificant => 1,
            stats::SignificanceClass::Significant => 2,
            stats::SignificanceClass::NotSignificant => 3,
        };
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        prop_assert!(rank(stats::classify(lo)) <= rank(stats::classify(hi)));
    }
}
