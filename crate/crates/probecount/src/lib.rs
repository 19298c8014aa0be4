//! Passive Wi-Fi probe-request analytics for transit vehicles.
//!
//! The pipeline turns monitor-mode captures from buses into per-stop
//! passenger estimates:
//!
//! 1. [`capture`] decodes pcap/radiotap captures into anonymized sightings
//!    (salted-hash device ids; raw MACs never leave the module).
//! 2. [`transit`] loads schedules, vehicle-trip assignments, and ticketing
//!    ground truth.
//! 3. [`mapper`] filters sightings by RSSI and the single-sighting
//!    (randomized MAC) heuristic, then maps each device to an entry and
//!    exit stop.
//! 4. [`estimator`] derives entries/exits/load/per-segment device counts
//!    and origin-destination matrices.
//! 5. [`stats`] and [`calibration`] score the estimates against ticketing
//!    (case A) and against internal consistency (case B) across a grid of
//!    filter parameters.
//! 6. [`sim`] generates seeded synthetic scenarios with full ground truth
//!    so every stage can be verified against a known oracle.

pub mod calibration;
pub mod capture;
pub mod config;
pub mod estimator;
pub mod mapper;
pub mod pipeline;
pub mod report;
pub mod sim;
pub mod stats;
pub mod time;
pub mod transit;

pub use capture::{CapturedFrame, DeviceId, Sighting};
pub use estimator::{OdMatrix, TripObservation, WindowIndexing};
pub use mapper::{DeviceSpan, FilterParams, StopMapping, RSSI_CANDIDATES};
pub use pipeline::{PipelineOptions, TripData};
pub use time::Instant;
pub use transit::{StopTimeline, TicketValidation, VehicleAssignment};
