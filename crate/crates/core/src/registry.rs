//! Country registry: maps ISO 3166-1 alpha-3 codes to analysis regions.
//!
//! Loaded from a `country,region` comma-separated file. Region labels are free
//! text (they may contain commas, so the file is proper CSV).

use std::collections::BTreeSet;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::record::{CodeError, CountryCode};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {source}")]
    BadCode {
        row: u64,
        #[source]
        source: CodeError,
    },
    #[error("row {row}: expected two fields `country,region`")]
    BadShape { row: u64 },
    #[error("country {country} mapped to both {first:?} and {second:?}")]
    ConflictingRegion {
        country: CountryCode,
        first: String,
        second: String,
    },
}

/// Mapping country -> region; each country belongs to exactly one region.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountryRegistry {
    regions: std::collections::BTreeMap<CountryCode, String>,
}

impl CountryRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, country: CountryCode, region: &str) -> Result<(), RegistryError> {
        if let Some(existing) = self.regions.get(&country) {
            if existing != region {
                return Err(RegistryError::ConflictingRegion {
                    country,
                    first: existing.clone(),
                    second: region.to_string(),
                });
            }
            return Ok(());
        }
        self.regions.insert(country, region.to_string());
        Ok(())
    }

    pub fn contains(&self, country: CountryCode) -> bool {
        self.regions.contains_key(&country)
    }

    pub fn region_of(&self, country: CountryCode) -> Option<&str> {
        self.regions.get(&country).map(String::as_str)
    }

    pub fn countries(&self) -> impl Iterator<Item = (CountryCode, &str)> {
        self.regions.iter().map(|(c, r)| (*c, r.as_str()))
    }

    pub fn regions(&self) -> BTreeSet<&str> {
        self.regions.values().map(String::as_str).collect()
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    /// Reads a `country,region` CSV. A leading `country,region` header row is
    /// accepted and skipped.
    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self, RegistryError> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut registry = CountryRegistry::new();
        for (idx, row) in csv_reader.records().enumerate() {
            let row_no = idx as u64 + 1;
            let row = row?;
            if row_no == 1 && row.get(0) == Some("country") {
                continue;
            }
            let (country, region) = match (row.get(0), row.get(1)) {
                (Some(c), Some(r)) if row.len() == 2 => (c, r),
                _ => return Err(RegistryError::BadShape { row: row_no }),
            };
            let code = CountryCode::new(country.trim())
                .map_err(|source| RegistryError::BadCode { row: row_no, source })?;
            registry.insert(code, region.trim())?;
        }
        Ok(registry)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self, RegistryError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), RegistryError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["country", "region"])?;
        for (country, region) in self.countries() {
            w.write_record([country.as_str(), region])?;
        }
        w.flush()?;
        Ok(())
    }
}
