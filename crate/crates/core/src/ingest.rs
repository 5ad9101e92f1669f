//! Streaming validation and ingestion of line-delimited record files.
//!
//! Two encodings are accepted and auto-detected from the first line:
//!
//! * **Key/value lines** — tab-separated `key=value` fields, one record per
//!   line. Required keys: `id`, `ts` (ISO-8601 UTC), `country` (alpha-3),
//!   `lang` (ISO 639-3), and either `chars` (integer) or `text`. Optional:
//!   `rt` (`true`/`false`/`1`/`0`). Unknown keys are ignored. `text` values
//!   may contain spaces but not tabs or newlines.
//! * **CSV** — a header row with the same column names, then one record per
//!   row. Detected when the first line's comma-separated fields include
//!   `id`, `ts`, `country`, and `lang`.
//!
//! When `text` is present (non-empty), its cleaned character count overrides
//! `chars`: whitespace-separated tokens starting with `http://`, `https://`,
//! or `#` are dropped, the rest are re-joined with single spaces, and the
//! remaining characters are counted.
//!
//! Processing is single-pass and memory-bounded: one line buffer is reused and
//! nothing is retained besides the running [`IngestStats`].

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Cursor, Read};
use std::path::Path;

use chrono::{DateTime, Utc};

use crate::month::{Month, MonthRange};
use crate::record::{CountryCode, LanguageCode, Record};
use crate::registry::CountryRegistry;

pub const DEFAULT_MIN_CHARS: u32 = 40;

/// July 2018 through August 2020.
pub fn default_date_range() -> MonthRange {
    MonthRange::new(
        Month::new(2018, 7).unwrap(),
        Month::new(2020, 8).unwrap(),
    )
    .unwrap()
}

/// Filtering configuration for ingestion.
#[derive(Debug, Clone)]
pub struct IngestConfig {
    /// Records with fewer cleaned characters are rejected (`TooShort`).
    pub min_chars: u32,
    pub drop_retweets: bool,
    /// Inclusive month interval; records outside are rejected (`OutOfRange`).
    pub date_range: MonthRange,
    /// Valid countries; anything else is rejected (`UnknownCountry`).
    pub registry: CountryRegistry,
}

impl IngestConfig {
    pub fn new(registry: CountryRegistry) -> Self {
        IngestConfig {
            min_chars: DEFAULT_MIN_CHARS,
            drop_retweets: true,
            date_range: default_date_range(),
            registry,
        }
    }
}

/// Why a line was rejected. Each reason is counted separately.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub enum RejectReason {
    MalformedLine,
    UnknownCountry,
    UnknownLanguage,
    TooShort,
    OutOfRange,
    RetweetDropped,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::MalformedLine => "malformed_line",
            RejectReason::UnknownCountry => "unknown_country",
            RejectReason::UnknownLanguage => "unknown_language",
            RejectReason::TooShort => "too_short",
            RejectReason::OutOfRange => "out_of_range",
            RejectReason::RetweetDropped => "retweet_dropped",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Running counts for one ingestion pass.
///
/// Invariant: `accepted + rejected() == lines` at every point.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// Record lines processed (CSV header rows are not record lines).
    pub lines: u64,
    pub accepted: u64,
    pub malformed_line: u64,
    pub unknown_country: u64,
    pub unknown_language: u64,
    pub too_short: u64,
    pub out_of_range: u64,
    pub retweet_dropped: u64,
    /// Set when an I/O failure aborted the pass early.
    pub incomplete: bool,
}

impl IngestStats {
    fn count_rejection(&mut self, reason: RejectReason) {
        match reason {
            RejectReason::MalformedLine => self.malformed_line += 1,
            RejectReason::UnknownCountry => self.unknown_country += 1,
            RejectReason::UnknownLanguage => self.unknown_language += 1,
            RejectReason::TooShort => self.too_short += 1,
            RejectReason::OutOfRange => self.out_of_range += 1,
            RejectReason::RetweetDropped => self.retweet_dropped += 1,
        }
    }

    pub fn rejection(&self, reason: RejectReason) -> u64 {
        match reason {
            RejectReason::MalformedLine => self.malformed_line,
            RejectReason::UnknownCountry => self.unknown_country,
            RejectReason::UnknownLanguage => self.unknown_language,
            RejectReason::TooShort => self.too_short,
            RejectReason::OutOfRange => self.out_of_range,
            RejectReason::RetweetDropped => self.retweet_dropped,
        }
    }

    pub fn rejected(&self) -> u64 {
        self.malformed_line
            + self.unknown_country
            + self.unknown_language
            + self.too_short
            + self.out_of_range
            + self.retweet_dropped
    }

    /// Combines stats from independent streams (parallel shard ingestion).
    pub fn merge(&mut self, other: &IngestStats) {
        self.lines += other.lines;
        self.accepted += other.accepted;
        self.malformed_line += other.malformed_line;
        self.unknown_country += other.unknown_country;
        self.unknown_language += other.unknown_language;
        self.too_short += other.too_short;
        self.out_of_range += other.out_of_range;
        self.retweet_dropped += other.retweet_dropped;
        self.incomplete |= other.incomplete;
    }
}

/// Unvalidated fields parsed from one input line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawRecord {
    pub id: String,
    pub ts: String,
    pub country: String,
    pub lang: String,
    pub chars: Option<u32>,
    pub text: Option<String>,
    pub rt: Option<bool>,
}

/// Character count after cleaning: drop URL and `#`-prefixed tokens, re-join
/// the rest with single spaces, count the remaining characters.
pub fn clean_char_count(text: &str) -> u32 {
    let mut count = 0u32;
    let mut kept = 0u32;
    for token in text.split_whitespace() {
        if token.starts_with("http://") || token.starts_with("https://") || token.starts_with('#') {
            continue;
        }
        count += token.chars().count() as u32;
        kept += 1;
    }
    if kept > 1 {
        count += kept - 1; // single space between kept tokens
    }
    count
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

/// Parses one tab-separated `key=value` line. `None` means malformed.
pub fn parse_kv_line(line: &str) -> Option<RawRecord> {
    let mut raw = RawRecord::default();
    let (mut has_id, mut has_ts, mut has_country, mut has_lang) = (false, false, false, false);
    for field in line.split('\t') {
        let (key, value) = field.split_once('=')?;
        match key {
            "id" => {
                raw.id = value.to_string();
                has_id = true;
            }
            "ts" => {
                raw.ts = value.to_string();
                has_ts = true;
            }
            "country" => {
                raw.country = value.to_string();
                has_country = true;
            }
            "lang" => {
                raw.lang = value.to_string();
                has_lang = true;
            }
            "chars" => raw.chars = Some(value.parse().ok()?),
            "text" => raw.text = Some(value.to_string()),
            "rt" => raw.rt = Some(parse_bool(value)?),
            _ => {} // unknown keys ignored
        }
    }
    if has_id && has_ts && has_country && has_lang {
        Some(raw)
    } else {
        None
    }
}

/// Validates raw fields against the config.
///
/// Checks run in a fixed order so a line failing several checks is counted
/// under the first: malformed, unknown country, unknown language, too short,
/// out of range, retweet.
pub fn validate(raw: &RawRecord, config: &IngestConfig) -> Result<Record, RejectReason> {
    let timestamp: DateTime<Utc> = DateTime::parse_from_rfc3339(&raw.ts)
        .map_err(|_| RejectReason::MalformedLine)?
        .with_timezone(&Utc);
    let char_count = match (&raw.text, raw.chars) {
        (Some(text), _) if !text.is_empty() => clean_char_count(text),
        (_, Some(chars)) => chars,
        _ => return Err(RejectReason::MalformedLine),
    };
    let country =
        CountryCode::new(&raw.country).map_err(|_| RejectReason::UnknownCountry)?;
    if !config.registry.contains(country) {
        return Err(RejectReason::UnknownCountry);
    }
    let language =
        LanguageCode::new(&raw.lang).map_err(|_| RejectReason::UnknownLanguage)?;
    if char_count < config.min_chars {
        return Err(RejectReason::TooShort);
    }
    if !config.date_range.contains(Month::from_datetime(&timestamp)) {
        return Err(RejectReason::OutOfRange);
    }
    let is_retweet = raw.rt.unwrap_or(false);
    if config.drop_retweets && is_retweet {
        return Err(RejectReason::RetweetDropped);
    }
    Ok(Record {
        id: raw.id.clone(),
        timestamp,
        country,
        language,
        char_count,
        is_retweet,
    })
}

/// `true` when a first line looks like a CSV header carrying the required
/// column names.
fn is_csv_header(first_line: &str) -> bool {
    let fields: Vec<&str> = first_line.split(',').map(str::trim).collect();
    ["id", "ts", "country", "lang"]
        .iter()
        .all(|k| fields.contains(k))
}

struct CsvColumns {
    id: usize,
    ts: usize,
    country: usize,
    lang: usize,
    chars: Option<usize>,
    text: Option<usize>,
    rt: Option<usize>,
}

impl CsvColumns {
    fn from_header(header: &csv::StringRecord) -> Option<Self> {
        let find = |name: &str| header.iter().position(|h| h.trim() == name);
        Some(CsvColumns {
            id: find("id")?,
            ts: find("ts")?,
            country: find("country")?,
            lang: find("lang")?,
            chars: find("chars"),
            text: find("text"),
            rt: find("rt"),
        })
    }

    /// `None` means the row is malformed.
    fn to_raw(&self, row: &csv::StringRecord) -> Option<RawRecord> {
        let cell = |i: usize| row.get(i).map(str::to_string);
        let opt_cell = |i: Option<usize>| i.and_then(|i| row.get(i)).filter(|s| !s.is_empty());
        let chars = match opt_cell(self.chars) {
            Some(s) => Some(s.parse().ok()?),
            None => None,
        };
        let rt = match opt_cell(self.rt) {
            Some(s) => Some(parse_bool(s)?),
            None => None,
        };
        Some(RawRecord {
            id: cell(self.id)?,
            ts: cell(self.ts)?,
            country: cell(self.country)?,
            lang: cell(self.lang)?,
            chars,
            text: opt_cell(self.text).map(str::to_string),
            rt,
        })
    }
}

enum Inner<R: BufRead> {
    KeyValue {
        reader: R,
        buf: String,
        pending_first: Option<String>,
    },
    Csv {
        rows: csv::StringRecordsIntoIter<Box<dyn Read + Send>>,
        columns: Option<CsvColumns>,
    },
    Empty,
}

/// Streams accepted records out of one source, tallying rejections.
///
/// Yields `Ok(record)` for each accepted record in file order; rejected lines
/// are counted in [`IngestStats`] and skipped. An I/O error ends the stream
/// and marks the stats incomplete.
pub struct RecordStream<'c, R: BufRead> {
    inner: Inner<R>,
    config: &'c IngestConfig,
    stats: IngestStats,
    finished: bool,
}

impl<'c> RecordStream<'c, BufReader<File>> {
    pub fn open(path: &Path, config: &'c IngestConfig) -> io::Result<Self> {
        Self::from_reader(BufReader::new(File::open(path)?), config)
    }
}

impl<'c, R: BufRead + Send + 'static> RecordStream<'c, R> {
    /// Sniffs the format from the first line and sets up the stream.
    pub fn from_reader(mut reader: R, config: &'c IngestConfig) -> io::Result<Self> {
        let mut first = String::new();
        let n = reader.read_line(&mut first)?;
        let inner = if n == 0 {
            Inner::Empty
        } else {
            let trimmed = first.trim_end_matches(['\r', '\n']);
            if is_csv_header(trimmed) {
                // Feed the header back so the csv reader sees it.
                let chained: Box<dyn Read + Send> =
                    Box::new(Cursor::new(first.into_bytes()).chain(reader));
                let mut csv_reader = csv::ReaderBuilder::new()
                    .has_headers(true)
                    .flexible(true)
                    .from_reader(chained);
                let columns = csv_reader
                    .headers()
                    .ok()
                    .and_then(CsvColumns::from_header);
                Inner::Csv {
                    rows: csv_reader.into_records(),
                    columns,
                }
            } else {
                Inner::KeyValue {
                    reader,
                    buf: String::new(),
                    pending_first: Some(trimmed.to_string()),
                }
            }
        };
        Ok(RecordStream {
            inner,
            config,
            stats: IngestStats::default(),
            finished: false,
        })
    }
}

impl<R: BufRead> RecordStream<'_, R> {
    pub fn stats(&self) -> &IngestStats {
        &self.stats
    }

    pub fn into_stats(self) -> IngestStats {
        self.stats
    }

    fn process_line(&mut self, line: &str) -> Option<Record> {
        self.stats.lines += 1;
        let outcome = match parse_kv_line(line) {
            Some(raw) => validate(&raw, self.config),
            None => Err(RejectReason::MalformedLine),
        };
        match outcome {
            Ok(record) => {
                self.stats.accepted += 1;
                Some(record)
            }
            Err(reason) => {
                self.stats.count_rejection(reason);
                None
            }
        }
    }

    fn process_csv_row(&mut self, row: &csv::StringRecord) -> Option<Record> {
        self.stats.lines += 1;
        let columns = match &self.inner {
            Inner::Csv { columns: Some(c), .. } => c,
            _ => {
                self.stats.count_rejection(RejectReason::MalformedLine);
                return None;
            }
        };
        let outcome = match columns.to_raw(row) {
            Some(raw) => validate(&raw, self.config),
            None => Err(RejectReason::MalformedLine),
        };
        match outcome {
            Ok(record) => {
                self.stats.accepted += 1;
                Some(record)
            }
            Err(reason) => {
                self.stats.count_rejection(reason);
                None
            }
        }
    }
}

enum Step {
    Line(String),
    CsvRow(csv::StringRecord),
    CsvBadRow,
    EndOfInput,
    IoError(io::Error),
}

impl<R: BufRead> Iterator for RecordStream<'_, R> {
    type Item = io::Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        loop {
            let step = match &mut self.inner {
                Inner::Empty => Step::EndOfInput,
                Inner::KeyValue {
                    reader,
                    buf,
                    pending_first,
                } => {
                    if let Some(first) = pending_first.take() {
                        Step::Line(first)
                    } else {
                        buf.clear();
                        match reader.read_line(buf) {
                            Ok(0) => Step::EndOfInput,
                            Ok(_) => Step::Line(buf.trim_end_matches(['\r', '\n']).to_string()),
                            Err(e) => Step::IoError(e),
                        }
                    }
                }
                Inner::Csv { rows, .. } => match rows.next() {
                    None => Step::EndOfInput,
                    Some(Ok(row)) => Step::CsvRow(row),
                    Some(Err(e)) if e.is_io_error() => match e.into_kind() {
                        csv::ErrorKind::Io(io_err) => Step::IoError(io_err),
                        _ => unreachable!("is_io_error checked"),
                    },
                    Some(Err(_)) => Step::CsvBadRow,
                },
            };
            match step {
                Step::EndOfInput => {
                    self.finished = true;
                    return None;
                }
                Step::IoError(e) => {
                    self.stats.incomplete = true;
                    self.finished = true;
                    return Some(Err(e));
                }
                Step::Line(line) => {
                    if let Some(record) = self.process_line(&line) {
                        return Some(Ok(record));
                    }
                }
                Step::CsvRow(row) => {
                    if let Some(record) = self.process_csv_row(&row) {
                        return Some(Ok(record));
                    }
                }
                Step::CsvBadRow => {
                    // Structurally broken row: count and move on.
                    self.stats.lines += 1;
                    self.stats.count_rejection(RejectReason::MalformedLine);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_config() -> IngestConfig {
        let mut registry = CountryRegistry::new();
        for (c, r) in [("USA", "America, North"), ("NZL", "Oceania"), ("ERI", "Africa, Sub")] {
            registry
                .insert(CountryCode::new(c).unwrap(), r)
                .unwrap();
        }
        IngestConfig::new(registry)
    }

    fn kv(id: &str, ts: &str, country: &str, lang: &str, chars: u32) -> String {
        format!("id={id}\tts={ts}\tcountry={country}\tlang={lang}\tchars={chars}")
    }

    #[test]
    fn boundary_length_filter() {
        let config = test_config();
        let line39 = kv("a", "2020-03-05T10:00:00Z", "USA", "eng", 39);
        let raw = parse_kv_line(&line39).unwrap();
        assert_eq!(validate(&raw, &config), Err(RejectReason::TooShort));

        let line40 = kv("a", "2020-03-05T10:00:00Z", "USA", "eng", 40);
        let raw = parse_kv_line(&line40).unwrap();
        let record = validate(&raw, &config).unwrap();
        assert_eq!(record.char_count, 40);
        assert_eq!(record.month(), Month::new(2020, 3).unwrap());
    }

    #[test]
    fn rejection_reasons() {
        let config = test_config();
        let cases = [
            ("id=a\tts=bad\tcountry=USA\tlang=eng\tchars=50", RejectReason::MalformedLine),
            ("not a record", RejectReason::MalformedLine),
            ("id=a\tts=2020-03-05T10:00:00Z\tcountry=XXQ\tlang=eng\tchars=50", RejectReason::UnknownCountry),
            ("id=a\tts=2020-03-05T10:00:00Z\tcountry=USA\tlang=e1g\tchars=50", RejectReason::UnknownLanguage),
            ("id=a\tts=2017-03-05T10:00:00Z\tcountry=USA\tlang=eng\tchars=50", RejectReason::OutOfRange),
            ("id=a\tts=2020-09-01T00:00:00Z\tcountry=USA\tlang=eng\tchars=50", RejectReason::OutOfRange),
            ("id=a\tts=2020-03-05T10:00:00Z\tcountry=USA\tlang=eng\tchars=50\trt=true", RejectReason::RetweetDropped),
        ];
        for (line, expected) in cases {
            let outcome = match parse_kv_line(line) {
                Some(raw) => validate(&raw, &config),
                None => Err(RejectReason::MalformedLine),
            };
            assert_eq!(outcome, Err(expected), "line: {line}");
        }
    }

    #[test]
    fn first_failing_check_wins() {
        let config = test_config();
        // Bad country and too short: counted as unknown country.
        let raw = parse_kv_line("id=a\tts=2020-03-05T10:00:00Z\tcountry=XXQ\tlang=eng\tchars=5")
            .unwrap();
        assert_eq!(validate(&raw, &config), Err(RejectReason::UnknownCountry));
    }

    #[test]
    fn text_overrides_chars_after_cleaning() {
        let config = test_config();
        let text = "the quick brown fox jumps over the lazy dog again https://t.co/xyz #tag";
        let line = format!(
            "id=a\tts=2020-03-05T10:00:00Z\tcountry=USA\tlang=eng\tchars=500\ttext={text}"
        );
        let raw = parse_kv_line(&line).unwrap();
        let record = validate(&raw, &config).unwrap();
        assert_eq!(
            record.char_count,
            "the quick brown fox jumps over the lazy dog again".chars().count() as u32
        );
    }

    #[test]
    fn clean_count_examples() {
        assert_eq!(clean_char_count("hello world"), 11);
        assert_eq!(clean_char_count("hello https://x.co world"), 11);
        assert_eq!(clean_char_count("#a #b #c"), 0);
        assert_eq!(clean_char_count(""), 0);
        assert_eq!(clean_char_count("  spaced   out  "), 10);
    }

    #[test]
    fn retweets_kept_when_configured() {
        let mut config = test_config();
        config.drop_retweets = false;
        let raw = parse_kv_line(
            "id=a\tts=2020-03-05T10:00:00Z\tcountry=USA\tlang=eng\tchars=50\trt=true",
        )
        .unwrap();
        let record = validate(&raw, &config).unwrap();
        assert!(record.is_retweet);
    }

    #[test]
    fn empty_source_yields_nothing() {
        let config = test_config();
        let mut stream = RecordStream::from_reader(io::Cursor::new(Vec::new()), &config).unwrap();
        assert!(stream.next().is_none());
        let stats = stream.into_stats();
        assert_eq!(stats, IngestStats::default());
    }

    #[test]
    fn stream_counts_balance() {
        let config = test_config();
        let mut data = String::new();
        for i in 0..5 {
            data.push_str(&kv(&format!("r{i}"), "2020-03-05T10:00:00Z", "USA", "eng", 50));
            data.push('\n');
        }
        data.push_str("garbage line\n");
        data.push_str(&kv("r5", "2020-03-05T10:00:00Z", "USA", "eng", 10));
        data.push('\n');

        let mut stream =
            RecordStream::from_reader(io::Cursor::new(data.into_bytes()), &config).unwrap();
        let accepted: Vec<Record> = stream.by_ref().map(|r| r.unwrap()).collect();
        let stats = stream.into_stats();
        assert_eq!(accepted.len(), 5);
        assert_eq!(stats.lines, 7);
        assert_eq!(stats.accepted, 5);
        assert_eq!(stats.malformed_line, 1);
        assert_eq!(stats.too_short, 1);
        assert_eq!(stats.accepted + stats.rejected(), stats.lines);
        assert!(!stats.incomplete);
    }

    #[test]
    fn csv_sources_accepted() {
        let config = test_config();
        let data = "\
id,ts,country,lang,chars,rt
a,2020-03-05T10:00:00Z,USA,eng,50,false
b,2020-03-06T10:00:00Z,NZL,mri,44,
c,2020-03-06T10:00:00Z,NZL,mri,44,true
";
        let mut stream =
            RecordStream::from_reader(io::Cursor::new(data.as_bytes().to_vec()), &config).unwrap();
        let accepted: Vec<Record> = stream.by_ref().map(|r| r.unwrap()).collect();
        let stats = stream.into_stats();
        assert_eq!(accepted.len(), 2);
        assert_eq!(stats.lines, 3);
        assert_eq!(stats.retweet_dropped, 1);
        assert_eq!(accepted[1].language, LanguageCode::new("mri").unwrap());
    }

    #[test]
    fn csv_text_column_with_commas() {
        let config = test_config();
        let data = "\
id,ts,country,lang,text
a,2020-03-05T10:00:00Z,USA,eng,\"a tweet, with commas, long enough to pass the length filter\"
";
        let mut stream =
            RecordStream::from_reader(io::Cursor::new(data.as_bytes().to_vec()), &config).unwrap();
        let accepted: Vec<Record> = stream.by_ref().map(|r| r.unwrap()).collect();
        assert_eq!(accepted.len(), 1);
        assert_eq!(
            accepted[0].char_count,
            "a tweet, with commas, long enough to pass the length filter".chars().count() as u32
        );
    }

    #[test]
    fn filtering_is_order_independent() {
        let config = test_config();
        let lines: Vec<String> = vec![
            kv("a", "2020-03-05T10:00:00Z", "USA", "eng", 50),
            kv("b", "2020-03-05T10:00:00Z", "USA", "eng", 10),
            kv("c", "2019-07-01T10:00:00Z", "NZL", "mri", 60),
            "junk".to_string(),
            kv("d", "2021-03-05T10:00:00Z", "USA", "eng", 50),
        ];
        let run = |lines: &[String]| {
            let data = lines.join("\n").into_bytes();
            let mut stream = RecordStream::from_reader(io::Cursor::new(data), &config).unwrap();
            let mut ids: Vec<String> =
                stream.by_ref().map(|r| r.unwrap().id).collect();
            ids.sort();
            (ids, stream.into_stats())
        };
        let (ids, stats) = run(&lines);
        let mut shuffled = lines.clone();
        shuffled.reverse();
        shuffled.swap(0, 2);
        let (ids_shuffled, stats_shuffled) = run(&shuffled);
        assert_eq!(ids, ids_shuffled);
        assert_eq!(stats.accepted, stats_shuffled.accepted);
        assert_eq!(stats.rejected(), stats_shuffled.rejected());
    }

    #[test]
    fn io_error_marks_incomplete() {
        struct FailingReader {
            served: bool,
        }
        impl Read for FailingReader {
            fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
                if self.served {
                    Err(io::Error::other("disk gone"))
                } else {
                    self.served = true;
                    let line = b"id=a\tts=2020-03-05T10:00:00Z\tcountry=USA\tlang=eng\tchars=50\n";
                    buf[..line.len()].copy_from_slice(line);
                    Ok(line.len())
                }
            }
        }
        let config = test_config();
        let reader = BufReader::new(FailingReader { served: false });
        let mut stream = RecordStream::from_reader(reader, &config).unwrap();
        assert!(stream.next().unwrap().is_ok());
        assert!(stream.next().unwrap().is_err());
        assert!(stream.next().is_none());
        let stats = stream.into_stats();
        assert!(stats.incomplete);
        assert_eq!(stats.accepted, 1);
    }

    #[test]
    fn stats_merge_adds_counters() {
        let mut a = IngestStats {
            lines: 10,
            accepted: 8,
            too_short: 2,
            ..Default::default()
        };
        let b = IngestStats {
            lines: 5,
            accepted: 4,
            malformed_line: 1,
            incomplete: true,
            ..Default::default()
        };
        a.merge(&b);
        assert_eq!(a.lines, 15);
        assert_eq!(a.accepted, 12);
        assert_eq!(a.rejected(), 3);
        assert!(a.incomplete);
    }
}
