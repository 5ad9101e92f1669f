//! Calendar-month arithmetic.
//!
//! Every table in the pipeline is keyed on `(country, month)`, so months need
//! a total order, distance arithmetic, and a stable `YYYY-MM` text form.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Utc};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MonthError {
    #[error("month of year {0} out of range 1-12")]
    OutOfRange(u32),
    #[error("malformed month {0:?}, expected YYYY-MM")]
    Malformed(String),
    #[error("empty month range: {start} is after {end}")]
    EmptyRange { start: Month, end: Month },
}

/// A calendar month in UTC, e.g. `2020-03`.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    year: i32,
    month: u8,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self, MonthError> {
        if !(1..=12).contains(&month) {
            return Err(MonthError::OutOfRange(month));
        }
        Ok(Month {
            year,
            month: month as u8,
        })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    /// Month of year in 1..=12, independent of the year.
    pub fn month_of_year(self) -> u8 {
        self.month
    }

    /// The month containing a UTC timestamp. No timezone adjustment is applied.
    pub fn from_datetime(ts: &DateTime<Utc>) -> Self {
        Month {
            year: ts.year(),
            month: ts.month() as u8,
        }
    }

    /// Months elapsed since 0000-01; gives ordering and distance.
    fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_index(idx: i64) -> Self {
        Month {
            year: idx.div_euclid(12) as i32,
            month: (idx.rem_euclid(12) + 1) as u8,
        }
    }

    /// This month shifted by `n` calendar months (negative shifts backwards).
    pub fn offset(self, n: i64) -> Self {
        Self::from_index(self.index() + n)
    }

    pub fn succ(self) -> Self {
        self.offset(1)
    }

    /// The same month of year in a different calendar year.
    pub fn with_year(self, year: i32) -> Self {
        Month { year, ..self }
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl fmt::Debug for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Month {
    type Err = MonthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || MonthError::Malformed(s.to_string());
        let (y, m) = s.split_once('-').ok_or_else(malformed)?;
        let year: i32 = y.parse().map_err(|_| malformed())?;
        let month: u32 = m.parse().map_err(|_| malformed())?;
        Month::new(year, month).map_err(|_| malformed())
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// An inclusive, non-empty interval of calendar months.
#[derive(Copy, Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct MonthRange {
    start: Month,
    end: Month,
}

impl MonthRange {
    pub fn new(start: Month, end: Month) -> Result<Self, MonthError> {
        if start > end {
            return Err(MonthError::EmptyRange { start, end });
        }
        Ok(MonthRange { start, end })
    }

    pub fn start(self) -> Month {
        self.start
    }

    pub fn end(self) -> Month {
        self.end
    }

    pub fn contains(self, m: Month) -> bool {
        self.start <= m && m <= self.end
    }

    pub fn len(self) -> usize {
        (self.end.index() - self.start.index() + 1) as usize
    }

    pub fn is_empty(self) -> bool {
        false // non-empty by construction
    }

    pub fn iter(self) -> impl Iterator<Item = Month> {
        (self.start.index()..=self.end.index()).map(Month::from_index)
    }
}

impl fmt::Display for MonthRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..={}", self.start, self.end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(y: i32, mo: u32) -> Month {
        Month::new(y, mo).unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        let month: Month = "2020-03".parse().unwrap();
        assert_eq!(month, m(2020, 3));
        assert_eq!(month.to_string(), "2020-03");
    }

    #[test]
    fn rejects_malformed() {
        assert!("2020".parse::<Month>().is_err());
        assert!("2020-13".parse::<Month>().is_err());
        assert!("2020-00".parse::<Month>().is_err());
        assert!("20xx-01".parse::<Month>().is_err());
        assert!(Month::new(2020, 0).is_err());
    }

    #[test]
    fn offset_crosses_year_boundaries() {
        assert_eq!(m(2020, 1).offset(-1), m(2019, 12));
        assert_eq!(m(2019, 3).offset(12), m(2020, 3));
        assert_eq!(m(2020, 8).offset(-17), m(2019, 3));
    }

    #[test]
    fn range_iterates_inclusively() {
        let r = MonthRange::new(m(2018, 11), m(2019, 2)).unwrap();
        let months: Vec<Month> = r.iter().collect();
        assert_eq!(months, vec![m(2018, 11), m(2018, 12), m(2019, 1), m(2019, 2)]);
        assert_eq!(r.len(), 4);
        assert!(r.contains(m(2019, 1)));
        assert!(!r.contains(m(2019, 3)));
    }

    #[test]
    fn empty_range_rejected() {
        assert!(MonthRange::new(m(2020, 2), m(2020, 1)).is_err());
    }

    #[test]
    fn month_from_timestamp_uses_utc_calendar_month() {
        let ts: DateTime<Utc> = "2020-03-31T23:59:59Z".parse().unwrap();
        assert_eq!(Month::from_datetime(&ts), m(2020, 3));
    }
}
