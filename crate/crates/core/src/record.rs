//! The record data model: one language-labeled, geo-referenced, timestamped
//! observation, plus the country/language code newtypes shared everywhere.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::month::Month;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid country code {0:?}, expected three ASCII letters")]
    Country(String),
    #[error("invalid language code {0:?}, expected three ASCII letters")]
    Language(String),
}

fn three_letters(s: &str) -> Option<[u8; 3]> {
    let bytes = s.as_bytes();
    if bytes.len() != 3 || !bytes.iter().all(|b| b.is_ascii_alphabetic()) {
        return None;
    }
    Some([bytes[0], bytes[1], bytes[2]])
}

macro_rules! code_impls {
    ($ty:ident, $err:path) => {
        impl $ty {
            pub fn as_str(&self) -> &str {
                // Constructed from ASCII letters only.
                std::str::from_utf8(&self.0).unwrap()
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl fmt::Debug for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = CodeError;
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                Self::new(&s).map_err(de::Error::custom)
            }
        }
    };
}

/// ISO 3166-1 alpha-3 country code, normalized to upper case.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 3]);

impl CountryCode {
    pub fn new(code: &str) -> Result<Self, CodeError> {
        three_letters(code)
            .map(|b| CountryCode(b.map(|c| c.to_ascii_uppercase())))
            .ok_or_else(|| CodeError::Country(code.to_string()))
    }
}

code_impls!(CountryCode, CodeError::Country);

/// ISO 639-3 language code, normalized to lower case.
#[derive(Copy, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LanguageCode([u8; 3]);

impl LanguageCode {
    pub fn new(code: &str) -> Result<Self, CodeError> {
        three_letters(code)
            .map(|b| LanguageCode(b.map(|c| c.to_ascii_lowercase())))
            .ok_or_else(|| CodeError::Language(code.to_string()))
    }
}

code_impls!(LanguageCode, CodeError::Language);

/// One validated observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub country: CountryCode,
    pub language: LanguageCode,
    /// Character count of the text after URL/hashtag cleaning.
    pub char_count: u32,
    pub is_retweet: bool,
}

impl Record {
    /// The calendar month the record is binned into.
    pub fn month(&self) -> Month {
        Month::from_datetime(&self.timestamp)
    }
}
