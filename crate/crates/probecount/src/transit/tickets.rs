//! Ticket validations: `tickets.csv` (`instant,route_id,stop_id[,trip_id]`)
//! and the per-stop ground-truth vector b.
//!
//! A validation names its stop directly when the feed carries one;
//! otherwise it is placed on the trip's timeline by instant: a validation
//! in `[arrival_t, arrival_t+1)` maps to stop t, anything before the
//! first arrival maps to stop 0, and anything after the last arrival
//! inside a grace window maps to the last stop. Later than that it is
//! rejected (tallied, never fatal).

use std::io::Read;

use super::{Schedule, StopTimeline, TicketValidation, TransitError};
use crate::time::Instant;

/// Dwell allowance at the terminus for late validations.
pub const DEFAULT_TICKET_GRACE_MS: i64 = 120_000;

pub fn load_tickets_csv<R: Read>(
    reader: R,
    schedule: Option<&Schedule>,
) -> Result<Vec<TicketValidation>, TransitError> {
    const FILE: &str = "tickets.csv";
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|source| TransitError::Csv { file: FILE, source })?
        .clone();
    let col = |name: &'static str| -> Result<usize, TransitError> {
        header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or(TransitError::MissingColumn { file: FILE, column: name })
    };
    let c_instant = col("instant")?;
    let c_route = col("route_id")?;
    let c_stop = col("stop_id")?;
    let c_trip = header.iter().position(|h| h.eq_ignore_ascii_case("trip_id"));

    let mut out = Vec::new();
    let mut line = 1;
    for record in rdr.records() {
        line += 1;
        let record = record.map_err(|source| TransitError::Csv { file: FILE, source })?;
        let instant = record
            .get(c_instant)
            .ok_or_else(|| TransitError::Row {
                file: FILE,
                line,
                message: "missing instant".into(),
            })
            .and_then(|s| {
                Instant::parse(s).map_err(|e| TransitError::Row {
                    file: FILE,
                    line,
                    message: e.to_string(),
                })
            })?;
        let route_id = record
            .get(c_route)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| TransitError::Row {
                file: FILE,
                line,
                message: "empty route_id".into(),
            })?
            .to_string();
        let stop_id = record.get(c_stop).unwrap_or("").to_string();
        if let (Some(schedule), false) = (schedule, stop_id.is_empty()) {
            if !schedule.route_serves_stop(&route_id, &stop_id) {
                return Err(TransitError::Row {
                    file: FILE,
                    line,
                    message: format!("stop {stop_id:?} not on route {route_id:?}"),
                });
            }
        }
        let trip_id = c_trip
            .and_then(|idx| record.get(idx))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        out.push(TicketValidation {
            instant,
            route_id,
            stop_id,
            trip_id,
        });
    }
    Ok(out)
}

/// Per-stop validation counts for one trip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TicketCounts {
    /// `b[t]`: validations assigned to stop t.
    pub b: Vec<u32>,
    /// Validations too late for the grace window (or naming a stop the trip
    /// does not serve).
    pub rejected: u32,
}

/// Counts validations per stop of `trip`. The input must already be
/// filtered to this trip (by trip_id, or by route and span).
pub fn ticket_counts(
    trip: &StopTimeline,
    validations: &[TicketValidation],
    grace_ms: i64,
) -> TicketCounts {
    let n = trip.n_stops();
    let mut b = vec![0u32; n];
    let mut rejected = 0u32;
    for v in validations {
        // A named stop wins; the time window is the fallback.
        let index = if !v.stop_id.is_empty() {
            trip.stop_index(&v.stop_id)
        } else {
            stop_for_instant(trip, v.instant, grace_ms)
        };
        match index {
            Some(t) => b[t] += 1,
            None => rejected += 1,
        }
    }
    TicketCounts { b, rejected }
}

fn stop_for_instant(trip: &StopTimeline, instant: Instant, grace_ms: i64) -> Option<usize> {
    let n = trip.n_stops();
    if instant < trip.first_arrival() {
        return Some(0);
    }
    if instant >= trip.last_arrival() {
        let cutoff = trip.last_arrival().add_millis(grace_ms);
        return (instant <= cutoff).then_some(n - 1);
    }
    // instant in [first, last): find t with arrival_t <= instant < arrival_t+1.
    let idx = trip.stops.partition_point(|(_, arr)| *arr <= instant);
    Some(idx - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transit::Direction;

    fn timeline() -> StopTimeline {
        StopTimeline {
            trip_id: "T1".into(),
            route_id: "R1".into(),
            direction: Direction::Outbound,
            stops: vec![
                ("S1".into(), Instant::from_millis(100_000)),
                ("S2".into(), Instant::from_millis(200_000)),
                ("S3".into(), Instant::from_millis(300_000)),
            ],
        }
    }

    fn ticket_at(ms: i64) -> TicketValidation {
        TicketValidation {
            instant: Instant::from_millis(ms),
            route_id: "R1".into(),
            stop_id: String::new(),
            trip_id: Some("T1".into()),
        }
    }

    #[test]
    fn no_validations_zero_vector() {
        let counts = ticket_counts(&timeline(), &[], DEFAULT_TICKET_GRACE_MS);
        assert_eq!(counts.b, vec![0, 0, 0]);
        assert_eq!(counts.rejected, 0);
    }

    #[test]
    fn window_mapping_buckets_between_arrivals() {
        let v = [ticket_at(110_000), ticket_at(150_000), ticket_at(199_999)];
        let counts = ticket_counts(&timeline(), &v, DEFAULT_TICKET_GRACE_MS);
        assert_eq!(counts.b, vec![3, 0, 0]);
    }

    #[test]
    fn early_validations_map_to_stop_zero() {
        let counts = ticket_counts(&timeline(), &[ticket_at(50_000)], DEFAULT_TICKET_GRACE_MS);
        assert_eq!(counts.b, vec![1, 0, 0]);
    }

    #[test]
    fn grace_window_catches_late_validations() {
        let v = [ticket_at(300_000 + 119_999), ticket_at(300_000 + 120_001)];
        let counts = ticket_counts(&timeline(), &v, DEFAULT_TICKET_GRACE_MS);
        assert_eq!(counts.b, vec![0, 0, 1]);
        assert_eq!(counts.rejected, 1);
    }

    #[test]
    fn named_stop_wins_over_time_window() {
        let mut v = ticket_at(110_000); // window would say stop 0
        v.stop_id = "S3".into();
        let counts = ticket_counts(&timeline(), &[v], DEFAULT_TICKET_GRACE_MS);
        assert_eq!(counts.b, vec![0, 0, 1]);
    }

    #[test]
    fn unknown_named_stop_is_rejected() {
        let mut v = ticket_at(110_000);
        v.stop_id = "S9".into();
        let counts = ticket_counts(&timeline(), &[v], DEFAULT_TICKET_GRACE_MS);
        assert_eq!(counts.b, vec![0, 0, 0]);
        assert_eq!(counts.rejected, 1);
    }

    #[test]
    fn accepted_validations_sum_matches() {
        let v: Vec<_> = (0..7).map(|i| ticket_at(100_000 + i * 30_000)).collect();
        let counts = ticket_counts(&timeline(), &v, DEFAULT_TICKET_GRACE_MS);
        let total: u32 = counts.b.iter().sum();
        assert_eq!(total + counts.rejected, 7);
    }
}
