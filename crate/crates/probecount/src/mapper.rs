//! RSSI / randomized-MAC filtering and device-to-stop mapping.
//!
//! A trip's surviving devices are condensed into first-seen/last-seen spans
//! and placed on the stop timeline: a device enters at stop t when its
//! first detection falls in `[arrival_t, arrival_t+1)` and exits at stop t
//! when its last detection falls in `(arrival_t-1, arrival_t]`. Detections
//! slightly before departure or after the final arrival are clamped inside
//! a boundary margin; spans wholly outside the margined window are
//! rejected.
//!
//! Devices seen exactly once in a trip are treated as randomized MACs and
//! dropped unless `include_random` is set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::capture::{DeviceId, Sighting};
use crate::time::Instant;
use crate::transit::StopTimeline;

/// The candidate minimum-RSSI grid: the no-filter bucket (-128) plus
/// -85..-55 dBm in 5 dB steps.
pub const RSSI_CANDIDATES: [i8; 8] = [-128, -85, -80, -75, -70, -65, -60, -55];

/// Default clamp allowance around a trip's first and last arrivals.
pub const DEFAULT_BOUNDARY_MARGIN_MS: i64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FilterParams {
    /// Sightings at or above this dBm survive; -128 keeps everything.
    pub min_rssi: i8,
    /// Keep devices seen exactly once in the trip (presumed randomized).
    pub include_random: bool,
}

impl FilterParams {
    pub fn new(min_rssi: i8, include_random: bool) -> Self {
        FilterParams {
            min_rssi,
            include_random,
        }
    }

    /// True when `min_rssi` is one of the canonical candidates; free values
    /// are allowed but reported as non-canonical by the CLI.
    pub fn is_canonical(&self) -> bool {
        RSSI_CANDIDATES.contains(&self.min_rssi)
    }
}

/// First/last detection of one device within a trip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceSpan {
    pub device_id: DeviceId,
    pub first_seen: Instant,
    pub last_seen: Instant,
    pub sighting_count: u32,
}

/// A device's boarding and alighting stops (indices into the timeline).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopMapping {
    pub device_id: DeviceId,
    pub entry_stop_index: usize,
    pub exit_stop_index: usize,
}

/// Applies the RSSI threshold, then (unless `include_random`) drops every
/// device whose surviving sighting count within the trip is exactly 1.
pub fn filter_sightings(sightings: &[Sighting], params: FilterParams) -> Vec<Sighting> {
    let strong: Vec<Sighting> = sightings
        .iter()
        .filter(|s| s.rssi_dbm >= params.min_rssi)
        .cloned()
        .collect();
    if params.include_random {
        return strong;
    }
    let mut counts: BTreeMap<DeviceId, u32> = BTreeMap::new();
    for s in &strong {
        *counts.entry(s.device_id).or_insert(0) += 1;
    }
    strong
        .into_iter()
        .filter(|s| counts[&s.device_id] > 1)
        .collect()
}

/// Condenses filtered sightings into one span per device, ordered by
/// (first_seen, device_id).
pub fn build_spans(sightings: &[Sighting]) -> Vec<DeviceSpan> {
    let mut spans: BTreeMap<DeviceId, DeviceSpan> = BTreeMap::new();
    for s in sightings {
        spans
            .entry(s.device_id)
            .and_modify(|span| {
                span.first_seen = span.first_seen.min(s.instant);
                span.last_seen = span.last_seen.max(s.instant);
                span.sighting_count += 1;
            })
            .or_insert_with(|| DeviceSpan {
                device_id: s.device_id,
                first_seen: s.instant,
                last_seen: s.instant,
                sighting_count: 1,
            });
    }
    let mut out: Vec<DeviceSpan> = spans.into_values().collect();
    out.sort_by_key(|s| (s.first_seen, s.device_id));
    out
}

/// Places a span on the timeline, or `None` when it lies wholly outside
/// the margined trip window.
pub fn map_to_stops(
    span: &DeviceSpan,
    timeline: &StopTimeline,
    boundary_margin_ms: i64,
) -> Option<StopMapping> {
    let n = timeline.n_stops();
    let first = timeline.first_arrival();
    let last = timeline.last_arrival();
    let window_start = first.add_millis(-boundary_margin_ms);
    let window_end = last.add_millis(boundary_margin_ms);
    if span.last_seen < window_start || span.first_seen > window_end {
        return None;
    }

    // Entry: t with first_seen in [arrival_t, arrival_t+1); clamp to 0
    // before departure and to the last stop past the final arrival.
    let entry_stop_index = if span.first_seen < first {
        0
    } else if span.first_seen >= last {
        n - 1
    } else {
        timeline
            .stops
            .partition_point(|(_, arr)| *arr <= span.first_seen)
            - 1
    };

    // Exit: t with last_seen in (arrival_t-1, arrival_t]; at least 1 (a
    // device cannot alight at the origin), clamped to the last stop past
    // the final arrival.
    let exit_stop_index = if span.last_seen <= first {
        1
    } else if span.last_seen > last {
        n - 1
    } else {
        timeline
            .stops
            .partition_point(|(_, arr)| *arr < span.last_seen)
    };

    debug_assert!(entry_stop_index <= exit_stop_index.max(1));
    Some(StopMapping {
        device_id: span.device_id,
        entry_stop_index: entry_stop_index.min(exit_stop_index),
        exit_stop_index,
    })
}
