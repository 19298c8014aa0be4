//! Schedules, vehicle-to-trip assignments, and ticketing ground truth.
//!
//! The schedule is a GTFS-like three-file CSV subset (stops, trips,
//! stop_times); assignments bind a sensor (vehicle) to a trip over a time
//! span; ticket validations are the ground-truth boarding events. All
//! indices are immutable once loaded.

mod assignments;
mod schedule;
mod tickets;

pub use assignments::{load_assignments_csv, AssignmentIndex};
pub use schedule::{load_schedule, load_schedule_dir, Schedule};
pub use tickets::{load_tickets_csv, ticket_counts, TicketCounts, DEFAULT_TICKET_GRACE_MS};

use serde::{Deserialize, Serialize};

use crate::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Outbound,
    Inbound,
}

impl Direction {
    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "outbound" | "0" => Some(Direction::Outbound),
            "inbound" | "1" => Some(Direction::Inbound),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Outbound => "outbound",
            Direction::Inbound => "inbound",
        }
    }
}

/// A trip's ordered stops with arrival instants: the time axis every
/// mapping in the pipeline is computed against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopTimeline {
    pub trip_id: String,
    pub route_id: String,
    pub direction: Direction,
    /// At least two stops, arrivals strictly increasing.
    pub stops: Vec<(String, Instant)>,
}

impl StopTimeline {
    pub fn n_stops(&self) -> usize {
        self.stops.len()
    }

    pub fn first_arrival(&self) -> Instant {
        self.stops[0].1
    }

    pub fn last_arrival(&self) -> Instant {
        self.stops[self.stops.len() - 1].1
    }

    pub fn arrival(&self, index: usize) -> Instant {
        self.stops[index].1
    }

    pub fn stop_ids(&self) -> Vec<String> {
        self.stops.iter().map(|(id, _)| id.clone()).collect()
    }

    /// Index of the stop whose id matches, if the trip serves it.
    pub fn stop_index(&self, stop_id: &str) -> Option<usize> {
        self.stops.iter().position(|(id, _)| id == stop_id)
    }
}

/// Binds a sensor (vehicle) to a trip over `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleAssignment {
    pub sensor_id: String,
    pub trip_id: String,
    pub start: Instant,
    pub end: Instant,
}

/// One fare validation event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TicketValidation {
    pub instant: Instant,
    pub route_id: String,
    /// Empty when the feed omits the stop; counting then falls back to the
    /// time-window mapping.
    pub stop_id: String,
    pub trip_id: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum TransitError {
    #[error("{file}:{line}: {message}")]
    Row {
        file: &'static str,
        line: u64,
        message: String,
    },
    #[error("{file}: missing required column {column:?}")]
    MissingColumn { file: &'static str, column: &'static str },
    #[error("trip {trip_id}: {message}")]
    Trip { trip_id: String, message: String },
    #[error("sensor {sensor_id}: overlapping assignment spans for trips {a} and {b}")]
    OverlappingSpans {
        sensor_id: String,
        a: String,
        b: String,
    },
    #[error("csv error in {file}: {source}")]
    Csv {
        file: &'static str,
        #[source]
        source: csv::Error,
    },
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
