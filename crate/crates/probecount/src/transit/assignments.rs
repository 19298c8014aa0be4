//! Vehicle-to-trip assignments: `assignments.csv`
//! (`sensor_id,trip_id,start,end`).
//!
//! Spans of one sensor must be pairwise non-overlapping (checked at load),
//! which makes trip resolution a partial function: an instant matches at
//! most one trip. Spans are start-inclusive, end-exclusive.

use std::collections::BTreeMap;
use std::io::Read;

use super::{TransitError, VehicleAssignment};
use crate::time::Instant;

/// Per-sensor assignment spans, sorted by start.
#[derive(Debug, Default)]
pub struct AssignmentIndex {
    by_sensor: BTreeMap<String, Vec<VehicleAssignment>>,
    n_assignments: usize,
}

impl AssignmentIndex {
    pub fn build(assignments: Vec<VehicleAssignment>) -> Result<Self, TransitError> {
        let mut by_sensor: BTreeMap<String, Vec<VehicleAssignment>> = BTreeMap::new();
        let n_assignments = assignments.len();
        for a in assignments {
            by_sensor.entry(a.sensor_id.clone()).or_default().push(a);
        }
        for (sensor_id, spans) in &mut by_sensor {
            spans.sort_by_key(|a| (a.start, a.end));
            for pair in spans.windows(2) {
                if pair[1].start < pair[0].end {
                    return Err(TransitError::OverlappingSpans {
                        sensor_id: sensor_id.clone(),
                        a: pair[0].trip_id.clone(),
                        b: pair[1].trip_id.clone(),
                    });
                }
            }
        }
        Ok(AssignmentIndex {
            by_sensor,
            n_assignments,
        })
    }

    /// The unique trip whose span contains `instant` for this sensor.
    /// Start-inclusive, end-exclusive.
    pub fn resolve_trip(&self, sensor_id: &str, instant: Instant) -> Option<&str> {
        let spans = self.by_sensor.get(sensor_id)?;
        // Last span starting at or before the instant; non-overlap makes it
        // the only candidate.
        let idx = spans.partition_point(|a| a.start <= instant);
        if idx == 0 {
            return None;
        }
        let candidate = &spans[idx - 1];
        (instant < candidate.end).then_some(candidate.trip_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.n_assignments
    }

    pub fn is_empty(&self) -> bool {
        self.n_assignments == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &VehicleAssignment> {
        self.by_sensor.values().flatten()
    }
}

/// Parses `assignments.csv` and builds the index.
pub fn load_assignments_csv<R: Read>(reader: R) -> Result<AssignmentIndex, TransitError> {
    const FILE: &str = "assignments.csv";
    let mut rdr = csv::ReaderBuilder::new()
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
    let c_sensor = col("sensor_id")?;
    let c_trip = col("trip_id")?;
    let c_start = col("start")?;
    let c_end = col("end")?;

    let mut out = Vec::new();
    let mut line = 1;
    for record in rdr.records() {
        line += 1;
        let record = record.map_err(|source| TransitError::Csv { file: FILE, source })?;
        let text = |idx: usize, what: &str| -> Result<String, TransitError> {
            record
                .get(idx)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .ok_or_else(|| TransitError::Row {
                    file: FILE,
                    line,
                    message: format!("empty {what}"),
                })
        };
        let when = |idx: usize| -> Result<Instant, TransitError> {
            record
                .get(idx)
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
                })
        };
        let start = when(c_start)?;
        let end = when(c_end)?;
        if end <= start {
            return Err(TransitError::Row {
                file: FILE,
                line,
                message: "span end must be after start".into(),
            });
        }
        out.push(VehicleAssignment {
            sensor_id: text(c_sensor, "sensor_id")?,
            trip_id: text(c_trip, "trip_id")?,
            start,
            end,
        });
    }
    AssignmentIndex::build(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(text: &str) -> Instant {
        Instant::parse(text).unwrap()
    }

    fn index() -> AssignmentIndex {
        let csv = "sensor_id,trip_id,start,end\n\
                   bus07,T1,2024-03-01T09:00:00Z,2024-03-01T09:40:00Z\n\
                   bus07,T2,2024-03-01T10:00:00Z,2024-03-01T10:40:00Z\n";
        load_assignments_csv(csv.as_bytes()).unwrap()
    }

    #[test]
    fn resolves_inside_span() {
        assert_eq!(index().resolve_trip("bus07", at("2024-03-01T09:15:00Z")), Some("T1"));
    }

    #[test]
    fn outside_all_spans_is_none() {
        let idx = index();
        assert_eq!(idx.resolve_trip("bus07", at("2024-03-01T09:50:00Z")), None);
        assert_eq!(idx.resolve_trip("bus99", at("2024-03-01T09:15:00Z")), None);
    }

    #[test]
    fn boundaries_are_start_inclusive_end_exclusive() {
        let idx = index();
        assert_eq!(idx.resolve_trip("bus07", at("2024-03-01T09:00:00Z")), Some("T1"));
        assert_eq!(idx.resolve_trip("bus07", at("2024-03-01T09:40:00Z")), None);
    }

    #[test]
    fn overlapping_spans_are_rejected_at_load() {
        let csv = "sensor_id,trip_id,start,end\n\
                   bus07,T1,2024-03-01T09:00:00Z,2024-03-01T09:40:00Z\n\
                   bus07,T2,2024-03-01T09:30:00Z,2024-03-01T10:10:00Z\n";
        assert!(matches!(
            load_assignments_csv(csv.as_bytes()),
            Err(TransitError::OverlappingSpans { .. })
        ));
    }

    #[test]
    fn back_to_back_spans_are_fine() {
        let csv = "sensor_id,trip_id,start,end\n\
                   bus07,T1,2024-03-01T09:00:00Z,2024-03-01T09:40:00Z\n\
                   bus07,T2,2024-03-01T09:40:00Z,2024-03-01T10:10:00Z\n";
        let idx = load_assignments_csv(csv.as_bytes()).unwrap();
        assert_eq!(idx.resolve_trip("bus07", at("2024-03-01T09:40:00Z")), Some("T2"));
    }
}
