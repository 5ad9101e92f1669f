#![forbid(unsafe_code)]

//! Measures geographic linguistic diversity from language-labeled,
//! geo-referenced, timestamped text records and detects statistically
//! significant shifts in a country's language distribution across time
//! windows.
//!
//! The pipeline: record files stream through validation ([`ingest`]) into
//! mergeable count tables ([`aggregate`]); per-country language distributions
//! yield monthly Herfindahl-Hirschman Index series ([`diversity`]); the
//! detectors compare seasonally-aligned windows ([`shift`]) and correct for
//! pre-existing trends with a difference-in-differences pass ([`did`]).
//! Production/sampling bias is quantified against demographics ([`bias`]),
//! and [`synth`] generates mixture-model corpora with ground truth for every
//! detector. [`stats`] is the self-contained statistics engine underneath.

pub mod aggregate;
pub mod bias;
pub mod did;
pub mod diversity;
pub mod ingest;
pub mod month;
pub mod record;
pub mod registry;
pub mod shift;
pub mod stats;
pub mod synth;

pub use aggregate::{CountTable, LanguageDistribution};
pub use month::{Month, MonthRange};
pub use record::{CountryCode, LanguageCode, Record};
pub use registry::CountryRegistry;
