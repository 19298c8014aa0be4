//! UTC instants on a millisecond axis.
//!
//! Every timeline in the pipeline (stop arrivals, sightings, ticket
//! validations, assignment spans) lives on the same integer axis:
//! milliseconds since the Unix epoch, always UTC. Keeping the arithmetic
//! on `i64` makes interval comparisons exact and output byte-stable;
//! chrono is only touched at the parse/format boundary.

use std::fmt;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};

/// A UTC instant with millisecond resolution.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct Instant(i64);

impl Instant {
    pub const fn from_millis(millis: i64) -> Self {
        Instant(millis)
    }

    /// Truncating conversion from a microsecond timestamp (pcap records
    /// carry microseconds; the sighting axis is milliseconds).
    pub const fn from_micros(micros: i64) -> Self {
        Instant(micros.div_euclid(1000))
    }

    pub const fn millis(self) -> i64 {
        self.0
    }

    pub const fn add_millis(self, delta: i64) -> Self {
        Instant(self.0 + delta)
    }

    /// Milliseconds from `earlier` to `self` (negative when `self` precedes it).
    pub const fn since(self, earlier: Instant) -> i64 {
        self.0 - earlier.0
    }

    /// Parses either an ISO-8601 / RFC 3339 timestamp (`2024-03-01T08:15:00.250Z`,
    /// offset forms accepted and normalized to UTC) or a plain integer of
    /// epoch milliseconds.
    pub fn parse(text: &str) -> Result<Self, TimeParseError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(TimeParseError(text.to_string()));
        }
        if let Ok(ms) = text.parse::<i64>() {
            return Ok(Instant(ms));
        }
        DateTime::parse_from_rfc3339(text)
            .map(|dt| Instant(dt.with_timezone(&Utc).timestamp_millis()))
            .map_err(|_| TimeParseError(text.to_string()))
    }

    /// ISO-8601 UTC with milliseconds, e.g. `2024-03-01T08:15:00.250Z`.
    pub fn to_iso8601(self) -> String {
        match Utc.timestamp_millis_opt(self.0).single() {
            Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Millis, true),
            // Out of chrono's datetime range; fall back to the raw count.
            None => self.0.to_string(),
        }
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso8601())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unparsable instant {0:?} (expected ISO-8601 UTC or integer epoch-milliseconds)")]
pub struct TimeParseError(pub String);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rfc3339_with_millis() {
        let t = Instant::parse("2024-03-01T08:15:00.250Z").unwrap();
        assert_eq!(t.to_iso8601(), "2024-03-01T08:15:00.250Z");
    }

    #[test]
    fn parses_epoch_millis() {
        let t = Instant::parse("1709280900250").unwrap();
        assert_eq!(t, Instant::parse("2024-03-01T08:15:00.250Z").unwrap());
    }

    #[test]
    fn parses_without_fraction_and_offset() {
        let a = Instant::parse("2024-03-01T08:15:00Z").unwrap();
        let b = Instant::parse("2024-03-01T09:15:00+01:00").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_iso8601(), "2024-03-01T08:15:00.000Z");
    }

    #[test]
    fn rejects_garbage() {
        assert!(Instant::parse("yesterday").is_err());
        assert!(Instant::parse("").is_err());
    }

    #[test]
    fn micros_truncate_toward_negative_infinity() {
        assert_eq!(Instant::from_micros(1500), Instant::from_millis(1));
        assert_eq!(Instant::from_micros(-1500), Instant::from_millis(-2));
    }
}
