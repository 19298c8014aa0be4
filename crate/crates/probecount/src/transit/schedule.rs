//! Schedule loading: `stops.csv`, `trips.csv`, `stop_times.csv`.
//!
//! Formats:
//!   stops.csv      `stop_id,name,lat,lon`
//!   trips.csv      `trip_id,route_id,direction`
//!   stop_times.csv `trip_id,seq,stop_id,arrival`
//!
//! Referential integrity and the StopTimeline invariants (>= 2 stops,
//! strictly increasing arrivals) are enforced at load; violations are fatal
//! with file and row numbers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use super::{Direction, StopTimeline, TransitError};
use crate::time::Instant;

#[derive(Debug, Clone)]
pub struct StopInfo {
    pub stop_id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

/// Immutable schedule index: timelines by trip id and by route.
#[derive(Debug, Default)]
pub struct Schedule {
    stops: HashMap<String, StopInfo>,
    timelines: BTreeMap<String, StopTimeline>,
    trips_by_route: BTreeMap<String, Vec<String>>,
}

impl Schedule {
    pub fn timeline(&self, trip_id: &str) -> Option<&StopTimeline> {
        self.timelines.get(trip_id)
    }

    /// Trip ids of a route, in timeline (first-arrival) order.
    pub fn route_trips(&self, route_id: &str) -> &[String] {
        self.trips_by_route
            .get(route_id)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn timelines(&self) -> impl Iterator<Item = &StopTimeline> {
        self.timelines.values()
    }

    pub fn n_trips(&self) -> usize {
        self.timelines.len()
    }

    pub fn stop_info(&self, stop_id: &str) -> Option<&StopInfo> {
        self.stops.get(stop_id)
    }

    pub fn route_ids(&self) -> impl Iterator<Item = &str> {
        self.trips_by_route.keys().map(|s| s.as_str())
    }

    /// True when `stop_id` exists somewhere on the route (used to validate
    /// ticket validations).
    pub fn route_serves_stop(&self, route_id: &str, stop_id: &str) -> bool {
        self.route_trips(route_id).iter().any(|trip_id| {
            self.timelines[trip_id]
                .stops
                .iter()
                .any(|(id, _)| id == stop_id)
        })
    }
}

fn reader_for<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn column(
    header: &csv::StringRecord,
    file: &'static str,
    name: &'static str,
) -> Result<usize, TransitError> {
    header
        .iter()
        .position(|h| h.eq_ignore_ascii_case(name))
        .ok_or(TransitError::MissingColumn { file, column: name })
}

fn row_err(file: &'static str, line: u64, message: impl Into<String>) -> TransitError {
    TransitError::Row {
        file,
        line,
        message: message.into(),
    }
}

/// Loads and cross-validates the three schedule files.
pub fn load_schedule<R1: Read, R2: Read, R3: Read>(
    stops_csv: R1,
    trips_csv: R2,
    stop_times_csv: R3,
) -> Result<Schedule, TransitError> {
    // stops.csv
    let mut stops = HashMap::new();
    {
        const FILE: &str = "stops.csv";
        let mut rdr = reader_for(stops_csv);
        let header = rdr
            .headers()
            .map_err(|source| TransitError::Csv { file: FILE, source })?
            .clone();
        let c_id = column(&header, FILE, "stop_id")?;
        let c_name = column(&header, FILE, "name")?;
        let c_lat = column(&header, FILE, "lat")?;
        let c_lon = column(&header, FILE, "lon")?;
        let mut line = 1;
        for record in rdr.records() {
            line += 1;
            let record = record.map_err(|source| TransitError::Csv { file: FILE, source })?;
            let stop_id = record
                .get(c_id)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| row_err(FILE, line, "empty stop_id"))?
                .to_string();
            let parse_coord = |idx: usize, what: &str| -> Result<f64, TransitError> {
                record
                    .get(idx)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| row_err(FILE, line, format!("unparsable {what}")))
            };
            let info = StopInfo {
                stop_id: stop_id.clone(),
                name: record.get(c_name).unwrap_or("").to_string(),
                lat: parse_coord(c_lat, "lat")?,
                lon: parse_coord(c_lon, "lon")?,
            };
            if stops.insert(stop_id.clone(), info).is_some() {
                return Err(row_err(FILE, line, format!("duplicate stop_id {stop_id:?}")));
            }
        }
    }

    // trips.csv
    let mut trip_meta: BTreeMap<String, (String, Direction)> = BTreeMap::new();
    {
        const FILE: &str = "trips.csv";
        let mut rdr = reader_for(trips_csv);
        let header = rdr
            .headers()
            .map_err(|source| TransitError::Csv { file: FILE, source })?
            .clone();
        let c_trip = column(&header, FILE, "trip_id")?;
        let c_route = column(&header, FILE, "route_id")?;
        let c_dir = column(&header, FILE, "direction")?;
        let mut line = 1;
        for record in rdr.records() {
            line += 1;
            let record = record.map_err(|source| TransitError::Csv { file: FILE, source })?;
            let trip_id = record
                .get(c_trip)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| row_err(FILE, line, "empty trip_id"))?
                .to_string();
            let route_id = record
                .get(c_route)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| row_err(FILE, line, "empty route_id"))?
                .to_string();
            let direction = record
                .get(c_dir)
                .and_then(Direction::parse)
                .ok_or_else(|| row_err(FILE, line, "direction must be outbound or inbound"))?;
            if trip_meta.insert(trip_id.clone(), (route_id, direction)).is_some() {
                return Err(row_err(FILE, line, format!("duplicate trip_id {trip_id:?}")));
            }
        }
    }

    // stop_times.csv
    let mut rows_by_trip: BTreeMap<String, Vec<(u32, String, Instant, u64)>> = BTreeMap::new();
    {
        const FILE: &str = "stop_times.csv";
        let mut rdr = reader_for(stop_times_csv);
        let header = rdr
            .headers()
            .map_err(|source| TransitError::Csv { file: FILE, source })?
            .clone();
        let c_trip = column(&header, FILE, "trip_id")?;
        let c_seq = column(&header, FILE, "seq")?;
        let c_stop = column(&header, FILE, "stop_id")?;
        let c_arrival = column(&header, FILE, "arrival")?;
        let mut line = 1;
        for record in rdr.records() {
            line += 1;
            let record = record.map_err(|source| TransitError::Csv { file: FILE, source })?;
            let trip_id = record.get(c_trip).unwrap_or("").to_string();
            if !trip_meta.contains_key(&trip_id) {
                return Err(row_err(
                    FILE,
                    line,
                    format!("stop_times row references unknown trip {trip_id:?}"),
                ));
            }
            let seq: u32 = record
                .get(c_seq)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| row_err(FILE, line, "unparsable seq"))?;
            let stop_id = record.get(c_stop).unwrap_or("").to_string();
            if !stops.contains_key(&stop_id) {
                return Err(row_err(
                    FILE,
                    line,
                    format!("stop_times row references unknown stop {stop_id:?}"),
                ));
            }
            let arrival = record
                .get(c_arrival)
                .ok_or_else(|| row_err(FILE, line, "missing arrival"))
                .and_then(|s| {
                    Instant::parse(s).map_err(|e| row_err(FILE, line, e.to_string()))
                })?;
            rows_by_trip
                .entry(trip_id)
                .or_default()
                .push((seq, stop_id, arrival, line));
        }
    }

    // Assemble timelines, enforcing the invariants.
    let mut timelines = BTreeMap::new();
    let mut trips_by_route: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (trip_id, mut rows) in rows_by_trip {
        rows.sort_by_key(|(seq, ..)| *seq);
        let mut seen_seq = HashSet::new();
        for (seq, _, _, line) in &rows {
            if !seen_seq.insert(*seq) {
                return Err(row_err(
                    "stop_times.csv",
                    *line,
                    format!("duplicate seq {seq} in trip {trip_id:?}"),
                ));
            }
        }
        if rows.len() < 2 {
            return Err(TransitError::Trip {
                trip_id,
                message: format!("timeline needs at least 2 stops, has {}", rows.len()),
            });
        }
        for pair in rows.windows(2) {
            if pair[1].2 <= pair[0].2 {
                return Err(row_err(
                    "stop_times.csv",
                    pair[1].3,
                    format!("non-increasing arrival in trip {trip_id:?}"),
                ));
            }
        }
        let (route_id, direction) = trip_meta[&trip_id].clone();
        trips_by_route
            .entry(route_id.clone())
            .or_default()
            .push(trip_id.clone());
        timelines.insert(
            trip_id.clone(),
            StopTimeline {
                trip_id,
                route_id,
                direction,
                stops: rows.into_iter().map(|(_, stop, arr, _)| (stop, arr)).collect(),
            },
        );
    }

    // Route trip lists in first-arrival order.
    for trip_ids in trips_by_route.values_mut() {
        trip_ids.sort_by_key(|id| (timelines[id].first_arrival(), id.clone()));
    }

    Ok(Schedule {
        stops,
        timelines,
        trips_by_route,
    })
}

/// Loads `stops.csv`, `trips.csv`, `stop_times.csv` from a directory.
pub fn load_schedule_dir(dir: &Path) -> Result<Schedule, TransitError> {
    let open = |name: &str| -> Result<std::fs::File, TransitError> {
        let path = dir.join(name);
        std::fs::File::open(&path).map_err(|source| TransitError::Io {
            path: path.display().to_string(),
            source,
        })
    };
    load_schedule(open("stops.csv")?, open("trips.csv")?, open("stop_times.csv")?)
}
