//! Per-stop entry/exit/load vectors and origin-destination matrices.
//!
//! From a trip's stop mappings this module derives the vectors the whole
//! evaluation rests on: i (Wi-Fi entries per stop), o (exits per stop), the
//! deduced load c with c_0 = i_0 - o_0 and c_t = c_t-1 + i_t - o_t, and w
//! (distinct devices per segment). Conservation holds by construction:
//! sum(i) = sum(o) = OD total and the load returns to zero at the final
//! stop.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::capture::{DeviceId, Sighting};
use crate::mapper::StopMapping;
use crate::transit::StopTimeline;

/// Which segment a window count describes.
///
/// `Departing` aligns `w[t]` with the segment leaving stop t, making it
/// directly comparable to the load `c[t]`; the final stop has no departing
/// segment, so `w[last]` is structurally zero. `Arriving` counts the segment
/// ending at stop t instead (`w[0]` is then structurally zero); `Arriving` at
/// the last index is the window `(arrival_last-1, arrival_last]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowIndexing {
    #[default]
    Departing,
    Arriving,
}

impl WindowIndexing {
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "departing" => Some(WindowIndexing::Departing),
            "arriving" => Some(WindowIndexing::Arriving),
            _ => None,
        }
    }
}

/// The per-stop vectors of one evaluated trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripObservation {
    pub trip_id: String,
    pub route_id: String,
    pub stops: Vec<String>,
    /// Ticket validations per stop (ground truth), when ticketing was loaded.
    pub b: Vec<u32>,
    /// Wi-Fi entries per stop.
    pub i: Vec<u32>,
    /// Wi-Fi exits per stop.
    pub o: Vec<u32>,
    /// Deduced load after each stop.
    pub c: Vec<u32>,
    /// Distinct devices per segment.
    pub w: Vec<u32>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EstimatorError {
    #[error("i and o vectors differ in length ({i} vs {o})")]
    LengthMismatch { i: usize, o: usize },
    #[error("load went negative at stop {stop} (running count {value})")]
    NegativeLoad { stop: usize, value: i64 },
}

/// Counts mappings into per-stop entry and exit vectors.
pub fn tally_entries_exits(mappings: &[StopMapping], n_stops: usize) -> (Vec<u32>, Vec<u32>) {
    let mut entries = vec![0u32; n_stops];
    let mut exits = vec![0u32; n_stops];
    for m in mappings {
        entries[m.entry_stop_index] += 1;
        exits[m.exit_stop_index] += 1;
    }
    (entries, exits)
}

/// Runs the load recurrence c_0 = i_0 - o_0, c_t = c_t-1 + i_t - o_t.
/// A negative intermediate value marks inconsistent external inputs.
pub fn load_series(entries: &[u32], exits: &[u32]) -> Result<Vec<u32>, EstimatorError> {
    if entries.len() != exits.len() {
        return Err(EstimatorError::LengthMismatch {
            i: entries.len(),
            o: exits.len(),
        });
    }
    let mut load = Vec::with_capacity(entries.len());
    let mut current: i64 = 0;
    for (t, (&i_t, &o_t)) in entries.iter().zip(exits).enumerate() {
        current += i_t as i64 - o_t as i64;
        if current < 0 {
            return Err(EstimatorError::NegativeLoad {
                stop: t,
                value: current,
            });
        }
        load.push(current as u32);
    }
    Ok(load)
}

/// Counts distinct devices per segment of the timeline.
///
/// Sightings must already be RSSI/random filtered. Under `Departing`,
/// `w[t]` covers `[arrival_t, arrival_t+1)` and `w[last]` = 0; under
/// `Arriving`, `w[t]` covers `(arrival_t-1, arrival_t]` and `w[0]` = 0.
pub fn window_counts(
    sightings: &[Sighting],
    timeline: &StopTimeline,
    indexing: WindowIndexing,
) -> Vec<u32> {
    let n = timeline.n_stops();
    let mut per_window: Vec<BTreeSet<DeviceId>> = vec![BTreeSet::new(); n];
    for s in sightings {
        match indexing {
            WindowIndexing::Departing => {
                // [arrival_t, arrival_t+1) for t < n-1.
                if s.instant < timeline.first_arrival() || s.instant >= timeline.last_arrival() {
                    continue;
                }
                let idx = timeline
                    .stops
                    .partition_point(|(_, arr)| *arr <= s.instant)
                    - 1;
                per_window[idx].insert(s.device_id);
            }
            WindowIndexing::Arriving => {
                // (arrival_t-1, arrival_t] for t >= 1.
                if s.instant <= timeline.first_arrival() || s.instant > timeline.last_arrival() {
                    continue;
                }
                let idx = timeline
                    .stops
                    .partition_point(|(_, arr)| *arr < s.instant);
                per_window[idx].insert(s.device_id);
            }
        }
    }
    per_window.into_iter().map(|set| set.len() as u32).collect()
}

/// Stop-by-stop origin/destination counts for a trip or route aggregate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdMatrix {
    /// Trip id or route id this matrix describes.
    pub scope: String,
    pub stop_ids: Vec<String>,
    /// `counts[entry][exit]`; entries below the diagonal stay zero.
    pub counts: Vec<Vec<u32>>,
}

impl OdMatrix {
    pub fn zero(scope: impl Into<String>, stop_ids: Vec<String>) -> Self {
        let n = stop_ids.len();
        OdMatrix {
            scope: scope.into(),
            stop_ids,
            counts: vec![vec![0; n]; n],
        }
    }

    /// Builds a trip-scoped matrix from its mappings.
    pub fn from_mappings(
        scope: impl Into<String>,
        stop_ids: Vec<String>,
        mappings: &[StopMapping],
    ) -> Self {
        let mut matrix = OdMatrix::zero(scope, stop_ids);
        for m in mappings {
            matrix.counts[m.entry_stop_index][m.exit_stop_index] += 1;
        }
        matrix
    }

    pub fn total(&self) -> u64 {
        self.counts
            .iter()
            .flat_map(|row| row.iter())
            .map(|&c| c as u64)
            .sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts
            .iter()
            .map(|row| row.iter().map(|&c| c as u64).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let n = self.stop_ids.len();
        let mut sums = vec![0u64; n];
        for row in &self.counts {
            for (c, &v) in row.iter().enumerate() {
                sums[c] += v as u64;
            }
        }
        sums
    }
}

/// Aggregates trip matrices into one scope (a commutative fold).
///
/// The stop universe is the union of the inputs' stop lists, ordered by
/// first appearance; trips of one route and direction share identical
/// sequences, so in practice this is that shared sequence.
pub fn od_matrix_union(scope: impl Into<String>, trips: &[OdMatrix]) -> OdMatrix {
    let mut stop_ids: Vec<String> = Vec::new();
    for trip in trips {
        for stop in &trip.stop_ids {
            if !stop_ids.contains(stop) {
                stop_ids.push(stop.clone());
            }
        }
    }
    let index_of = |stop: &str| stop_ids.iter().position(|s| s == stop).unwrap();
    let mut out = OdMatrix::zero(scope, stop_ids.clone());
    for trip in trips {
        for (r, row) in trip.counts.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > 0 {
                    out.counts[index_of(&trip.stop_ids[r])][index_of(&trip.stop_ids[c])] += v;
                }
            }
        }
    }
    out
}
