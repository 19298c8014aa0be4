//! Synthetic, fully ground-truthed scenarios.
//!
//! A scenario is a miniature bus operation: routes with fixed stop
//! sequences, one instrumented vehicle per route running its trips back to
//! back, passengers with known boarding/alighting stops, carried devices
//! emitting Poisson probe trains while onboard, bystander noise devices
//! near stops, and one ticket validation per passenger. Everything derives
//! from a single 64-bit seed through a pinned xoshiro256** generator, so a
//! scenario is byte-reproducible.

mod rng;

pub use rng::Xoshiro256StarStar;

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capture::{anonymize_mac, format_mac, Sighting};
use crate::config::KvEntry;
use crate::time::Instant;
use crate::transit::{Direction, TicketValidation, VehicleAssignment};

/// Passengers drawn per trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PassengerCount {
    Constant(u32),
    Poisson(f64),
}

impl PassengerCount {
    fn parse(text: &str) -> Option<Self> {
        let (kind, value) = text.split_once(':')?;
        match kind.trim() {
            "constant" => value.trim().parse().ok().map(PassengerCount::Constant),
            "poisson" => {
                let lambda: f64 = value.trim().parse().ok()?;
                (lambda >= 0.0).then_some(PassengerCount::Poisson(lambda))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_routes: u32,
    pub n_trips_per_route: u32,
    pub n_stops_per_trip: u32,
    pub segment_seconds: f64,
    pub passengers_per_trip: PassengerCount,
    /// Mean of the exponential inter-probe gap.
    pub probe_interval_seconds: f64,
    /// Probability a passenger carries a detectable device.
    pub p_device: f64,
    /// Probability a carried device re-randomizes its MAC on every probe.
    pub p_random_mac: f64,
    /// Bystander devices per trip, anchored near one stop each.
    pub n_noise_devices: u32,
    /// Inclusive dBm range for onboard probes.
    pub onboard_rssi: (i8, i8),
    /// Inclusive dBm range for noise probes.
    pub noise_rssi: (i8, i8),
    pub max_load: u32,
    /// Validation delay after boarding.
    pub ticket_lag_seconds: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 42,
            n_routes: 2,
            n_trips_per_route: 10,
            n_stops_per_trip: 8,
            segment_seconds: 120.0,
            passengers_per_trip: PassengerCount::Poisson(6.0),
            probe_interval_seconds: 15.0,
            p_device: 0.8,
            p_random_mac: 0.3,
            n_noise_devices: 3,
            onboard_rssi: (-70, -40),
            noise_rssi: (-95, -75),
            max_load: 83,
            ticket_lag_seconds: 0.0,
        }
    }
}

/// Scenarios all start at this fixed instant; only the seed varies runs.
const SCENARIO_EPOCH: Instant = Instant::from_millis(1_709_539_200_000); // 2024-03-04T08:00:00Z

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SimError {
    #[error("config field {field}: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: &str, message: impl Into<String>) -> SimError {
    SimError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_routes == 0 {
            return Err(field_err("n_routes", "must be at least 1"));
        }
        if self.n_trips_per_route == 0 {
            return Err(field_err("n_trips_per_route", "must be at least 1"));
        }
        if self.n_stops_per_trip < 2 {
            return Err(field_err(
                "n_stops_per_trip",
                "a trip needs at least 2 stops",
            ));
        }
        if !(self.segment_seconds > 0.0) {
            return Err(field_err("segment_seconds", "must be positive"));
        }
        if !(self.probe_interval_seconds > 0.0) {
            return Err(field_err("probe_interval_seconds", "must be positive"));
        }
        for (name, p) in [("p_device", self.p_device), ("p_random_mac", self.p_random_mac)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(field_err(name, "probability must be in [0, 1]"));
            }
        }
        for (name, (lo, hi)) in [
            ("onboard_rssi", self.onboard_rssi),
            ("noise_rssi", self.noise_rssi),
        ] {
            if lo > hi {
                return Err(field_err(name, "range lo must not exceed hi"));
            }
            if hi > 0 {
                return Err(field_err(name, "dBm values must be within [-128, 0]"));
            }
        }
        if self.max_load == 0 {
            return Err(field_err("max_load", "must be at least 1"));
        }
        if self.ticket_lag_seconds < 0.0 {
            return Err(field_err("ticket_lag_seconds", "must be non-negative"));
        }
        if let PassengerCount::Constant(k) = self.passengers_per_trip {
            let capacity = self.max_load * (self.n_stops_per_trip - 1);
            if k > capacity {
                return Err(field_err(
                    "passengers_per_trip",
                    format!("{k} passengers cannot fit under max_load {}", self.max_load),
                ));
            }
        }
        Ok(())
    }

    /// Applies `key = value` entries over the defaults.
    pub fn from_kv(entries: &[KvEntry]) -> Result<Self, SimError> {
        let mut config = ScenarioConfig::default();
        for entry in entries {
            config.apply(entry)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, entry: &KvEntry) -> Result<(), SimError> {
        let KvEntry { key, value, line } = entry;
        let bad = |message: String| {
            field_err(key, format!("{message} (line {line})"))
        };
        fn parse_in<T: std::str::FromStr>(value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("unparsable value {value:?}"))
        }
        match key.as_str() {
            "seed" => self.seed = parse_in(value).map_err(bad)?,
            "n_routes" => self.n_routes = parse_in(value).map_err(bad)?,
            "n_trips_per_route" => self.n_trips_per_route = parse_in(value).map_err(bad)?,
            "n_stops_per_trip" => self.n_stops_per_trip = parse_in(value).map_err(bad)?,
            "segment_seconds" => self.segment_seconds = parse_in(value).map_err(bad)?,
            "passengers_per_trip" => {
                self.passengers_per_trip = PassengerCount::parse(value).ok_or_else(|| {
                    bad("expected constant:<n> or poisson:<lambda>".to_string())
                })?
            }
            "probe_interval_seconds" => {
                self.probe_interval_seconds = parse_in(value).map_err(bad)?
            }
            "p_device" => self.p_device = parse_in(value).map_err(bad)?,
            "p_random_mac" => self.p_random_mac = parse_in(value).map_err(bad)?,
            "n_noise_devices" => self.n_noise_devices = parse_in(value).map_err(bad)?,
            "onboard_rssi" => self.onboard_rssi = parse_rssi_range(value).map_err(bad)?,
            "noise_rssi" => self.noise_rssi = parse_rssi_range(value).map_err(bad)?,
            "max_load" => self.max_load = parse_in(value).map_err(bad)?,
            "ticket_lag_seconds" => self.ticket_lag_seconds = parse_in(value).map_err(bad)?,
            other => return Err(field_err(other, format!("unknown config key (line {line})"))),
        }
        Ok(())
    }
}

/// `"-70,-40"` or `"-70..-40"`.
fn parse_rssi_range(text: &str) -> Result<(i8, i8), String> {
    let parts: Vec<&str> = if text.contains("..") {
        text.splitn(2, "..").collect()
    } else {
        text.splitn(2, ',').collect()
    };
    if parts.len() != 2 {
        return Err(format!("expected lo,hi range, got {text:?}"));
    }
    let lo: i8 = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("unparsable dBm {:?}", parts[0]))?;
    let hi: i8 = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("unparsable dBm {:?}", parts[1]))?;
    Ok((lo, hi))
}

/// A sighting as the sensor saw it, raw MAC still attached. Only the
/// scenario writer and the hashing helper ever touch these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimSighting {
    pub instant: Instant,
    pub mac: [u8; 6],
    pub rssi_dbm: i8,
    pub sensor_id: String,
}

/// Per-device truth: where it really boarded and alighted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceTruth {
    pub entry_stop: usize,
    pub exit_stop: usize,
    pub randomized: bool,
    pub probe_count: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripTruth {
    pub trip_id: String,
    pub route_id: String,
    pub stop_ids: Vec<String>,
    /// True boardings per stop (every passenger, device or not).
    pub boardings: Vec<u32>,
    pub alightings: Vec<u32>,
    /// True load after each stop.
    pub load: Vec<u32>,
    pub devices: Vec<DeviceTruth>,
    /// Passengers skipped because no itinerary fit under max_load.
    pub dropped_passengers: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct GroundTruth {
    pub trips: Vec<TripTruth>,
}

/// Reference per-stop vectors built by direct counting over the truth —
/// no shared code with the estimator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCounts {
    pub b: Vec<u32>,
    pub i: Vec<u32>,
    pub o: Vec<u32>,
    pub c: Vec<u32>,
}

/// Builds the vectors a perfect sensor would produce for one trip.
pub fn oracle_counts(truth: &TripTruth) -> OracleCounts {
    let n = truth.stop_ids.len();
    let mut i = vec![0u32; n];
    let mut o = vec![0u32; n];
    let mut c = vec![0u32; n];
    for device in &truth.devices {
        i[device.entry_stop] += 1;
        o[device.exit_stop] += 1;
    }
    for t in 0..n {
        c[t] = truth
            .devices
            .iter()
            .filter(|d| d.entry_stop <= t && t < d.exit_stop)
            .count() as u32;
    }
    OracleCounts {
        b: truth.boardings.clone(),
        i,
        o,
        c,
    }
}

#[derive(Debug, Clone)]
pub struct SimStop {
    pub stop_id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone)]
pub struct SimTrip {
    pub trip_id: String,
    pub route_id: String,
    pub direction: Direction,
    /// (seq, stop_id, arrival)
    pub stop_times: Vec<(u32, String, Instant)>,
}

/// A fully generated scenario: schedule, assignments, raw sightings,
/// tickets, and the ground truth behind them.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub stops: Vec<SimStop>,
    pub trips: Vec<SimTrip>,
    pub assignments: Vec<VehicleAssignment>,
    pub sightings: Vec<SimSighting>,
    pub tickets: Vec<TicketValidation>,
    pub truth: GroundTruth,
}

/// Generates a scenario. Deterministic for a fixed config (byte-identical
/// files on every run and platform).
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario, SimError> {
    config.validate()?;
    let mut rng = Xoshiro256StarStar::seed_from(config.seed);
    let mut used_macs: HashSet<[u8; 6]> = HashSet::new();
    let mut fresh_mac = move |rng: &mut Xoshiro256StarStar, local: bool| -> [u8; 6] {
        loop {
            let mac = rng.mac_address(local);
            if used_macs.insert(mac) {
                return mac;
            }
        }
    };

    let n_stops = config.n_stops_per_trip as usize;
    let segment_ms = (config.segment_seconds * 1000.0).round() as i64;
    let trip_duration_ms = segment_ms * (n_stops as i64 - 1);
    let layover_ms = 2 * segment_ms;
    let span_margin_ms = segment_ms / 2;

    let mut scenario = Scenario {
        config: config.clone(),
        stops: Vec::new(),
        trips: Vec::new(),
        assignments: Vec::new(),
        sightings: Vec::new(),
        tickets: Vec::new(),
        truth: GroundTruth::default(),
    };

    for route_idx in 0..config.n_routes {
        let route_id = format!("R{:02}", route_idx + 1);
        let sensor_id = format!("bus{:02}", route_idx + 1);
        let stop_ids: Vec<String> = (0..n_stops)
            .map(|s| format!("{route_id}S{:02}", s + 1))
            .collect();
        for (s, stop_id) in stop_ids.iter().enumerate() {
            scenario.stops.push(SimStop {
                stop_id: stop_id.clone(),
                name: format!("{route_id} stop {}", s + 1),
                lat: 32.64 + route_idx as f64 * 0.02 + s as f64 * 0.003,
                lon: -16.91 + s as f64 * 0.004,
            });
        }

        for trip_idx in 0..config.n_trips_per_route {
            let trip_id = format!("{route_id}T{:03}", trip_idx + 1);
            let start =
                SCENARIO_EPOCH.add_millis(trip_idx as i64 * (trip_duration_ms + layover_ms));
            let arrivals: Vec<Instant> = (0..n_stops)
                .map(|s| start.add_millis(s as i64 * segment_ms))
                .collect();
            let last_arrival = arrivals[n_stops - 1];

            scenario.trips.push(SimTrip {
                trip_id: trip_id.clone(),
                route_id: route_id.clone(),
                direction: Direction::Outbound,
                stop_times: (0..n_stops)
                    .map(|s| (s as u32, stop_ids[s].clone(), arrivals[s]))
                    .collect(),
            });
            scenario.assignments.push(VehicleAssignment {
                sensor_id: sensor_id.clone(),
                trip_id: trip_id.clone(),
                start: start.add_millis(-span_margin_ms),
                end: last_arrival.add_millis(span_margin_ms),
            });

            let trip_truth = generate_trip(
                config,
                &mut rng,
                &mut fresh_mac,
                &trip_id,
                &route_id,
                &sensor_id,
                &stop_ids,
                &arrivals,
                &mut scenario.sightings,
                &mut scenario.tickets,
            );
            scenario.truth.trips.push(trip_truth);
        }
    }

    scenario
        .sightings
        .sort_by(|a, b| (&a.sensor_id, a.instant, a.mac).cmp(&(&b.sensor_id, b.instant, b.mac)));
    scenario
        .tickets
        .sort_by(|a, b| (a.instant, &a.route_id, &a.stop_id).cmp(&(b.instant, &b.route_id, &b.stop_id)));
    Ok(scenario)
}

#[allow(clippy::too_many_arguments)]
fn generate_trip(
    config: &ScenarioConfig,
    rng: &mut Xoshiro256StarStar,
    fresh_mac: &mut impl FnMut(&mut Xoshiro256StarStar, bool) -> [u8; 6],
    trip_id: &str,
    route_id: &str,
    sensor_id: &str,
    stop_ids: &[String],
    arrivals: &[Instant],
    sightings: &mut Vec<SimSighting>,
    tickets: &mut Vec<TicketValidation>,
) -> TripTruth {
    let n_stops = stop_ids.len();
    let n_passengers = match config.passengers_per_trip {
        PassengerCount::Constant(k) => k,
        PassengerCount::Poisson(lambda) => rng.poisson(lambda) as u32,
    };

    let mut boardings = vec![0u32; n_stops];
    let mut alightings = vec![0u32; n_stops];
    let mut segment_load = vec![0u32; n_stops.saturating_sub(1)];
    let mut devices = Vec::new();
    let mut dropped = 0u32;

    for _ in 0..n_passengers {
        // Draw an itinerary; redraw when it would breach max_load.
        let mut itinerary = None;
        for _ in 0..1000 {
            let entry = rng.uniform_usize(0, n_stops - 2);
            let exit = rng.uniform_usize(entry + 1, n_stops - 1);
            if segment_load[entry..exit].iter().all(|&l| l < config.max_load) {
                itinerary = Some((entry, exit));
                break;
            }
        }
        let Some((entry, exit)) = itinerary else {
            dropped += 1;
            continue;
        };
        for slot in &mut segment_load[entry..exit] {
            *slot += 1;
        }
        boardings[entry] += 1;
        alightings[exit] += 1;

        let lag_ms = (config.ticket_lag_seconds * 1000.0).round() as i64;
        tickets.push(TicketValidation {
            instant: arrivals[entry].add_millis(lag_ms),
            route_id: route_id.to_string(),
            stop_id: stop_ids[entry].clone(),
            trip_id: Some(trip_id.to_string()),
        });

        if !rng.bernoulli(config.p_device) {
            continue;
        }
        let randomized = rng.bernoulli(config.p_random_mac);
        let stable_mac = if randomized {
            None
        } else {
            Some(fresh_mac(rng, false))
        };

        // Poisson probe train over [boarding arrival, alighting arrival).
        // The emitted instant is millisecond-rounded, so the guard is on
        // the rounded value: a probe must never land on the alighting
        // arrival itself.
        let window_ms = arrivals[exit].since(arrivals[entry]);
        let window_s = window_ms as f64 / 1000.0;
        let mut t = rng.exponential(config.probe_interval_seconds);
        let mut probe_count = 0u32;
        while t < window_s {
            let probe_ms = (t * 1000.0).round() as i64;
            if probe_ms < window_ms {
                let mac = match stable_mac {
                    Some(mac) => mac,
                    None => fresh_mac(rng, true),
                };
                sightings.push(SimSighting {
                    instant: arrivals[entry].add_millis(probe_ms),
                    mac,
                    rssi_dbm: rng
                        .uniform_i64(config.onboard_rssi.0 as i64, config.onboard_rssi.1 as i64)
                        as i8,
                    sensor_id: sensor_id.to_string(),
                });
                probe_count += 1;
            }
            t += rng.exponential(config.probe_interval_seconds);
        }
        devices.push(DeviceTruth {
            entry_stop: entry,
            exit_stop: exit,
            randomized,
            probe_count,
        });
    }

    // Bystanders: stable devices probing inside a one-segment window
    // centered on a stop they loiter near.
    let trip_start = arrivals[0];
    let trip_end = arrivals[n_stops - 1];
    let segment_ms = (config.segment_seconds * 1000.0).round() as i64;
    for _ in 0..config.n_noise_devices {
        let anchor = rng.uniform_usize(0, n_stops - 1);
        let window_start = arrivals[anchor].add_millis(-segment_ms / 2).max(trip_start);
        let window_end = arrivals[anchor].add_millis(segment_ms / 2).min(trip_end);
        if window_end <= window_start {
            continue;
        }
        let mac = fresh_mac(rng, false);
        let window_ms = window_end.since(window_start);
        let window_s = window_ms as f64 / 1000.0;
        let mut t = rng.exponential(config.probe_interval_seconds);
        while t < window_s {
            let probe_ms = (t * 1000.0).round() as i64;
            if probe_ms < window_ms {
                sightings.push(SimSighting {
                    instant: window_start.add_millis(probe_ms),
                    mac,
                    rssi_dbm: rng
                        .uniform_i64(config.noise_rssi.0 as i64, config.noise_rssi.1 as i64)
                        as i8,
                    sensor_id: sensor_id.to_string(),
                });
            }
            t += rng.exponential(config.probe_interval_seconds);
        }
    }

    let mut load = vec![0u32; n_stops];
    for t in 0..n_stops.saturating_sub(1) {
        load[t] = segment_load[t];
    }

    TripTruth {
        trip_id: trip_id.to_string(),
        route_id: route_id.to_string(),
        stop_ids: stop_ids.to_vec(),
        boardings,
        alightings,
        load,
        devices,
        dropped_passengers: dropped,
    }
}

impl Scenario {
    pub fn stops_csv(&self) -> String {
        let mut out = String::from("stop_id,name,lat,lon\n");
        for s in &self.stops {
            out.push_str(&format!("{},{},{},{}\n", s.stop_id, s.name, s.lat, s.lon));
        }
        out
    }

    pub fn trips_csv(&self) -> String {
        let mut out = String::from("trip_id,route_id,direction\n");
        for t in &self.trips {
            out.push_str(&format!(
                "{},{},{}\n",
                t.trip_id,
                t.route_id,
                t.direction.as_str()
            ));
        }
        out
    }

    pub fn stop_times_csv(&self) -> String {
        let mut out = String::from("trip_id,seq,stop_id,arrival\n");
        for t in &self.trips {
            for (seq, stop_id, arrival) in &t.stop_times {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    t.trip_id,
                    seq,
                    stop_id,
                    arrival.to_iso8601()
                ));
            }
        }
        out
    }

    pub fn assignments_csv(&self) -> String {
        let mut out = String::from("sensor_id,trip_id,start,end\n");
        for a in &self.assignments {
            out.push_str(&format!(
                "{},{},{},{}\n",
                a.sensor_id,
                a.trip_id,
                a.start.to_iso8601(),
                a.end.to_iso8601()
            ));
        }
        out
    }

    /// Sightings CSV with raw MACs (the shape a sensor log has before
    /// anonymization; ingesting it requires a salt).
    pub fn sightings_csv(&self) -> String {
        let mut out = String::from("instant,mac,rssi,sensor_id\n");
        for s in &self.sightings {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.instant.to_iso8601(),
                format_mac(&s.mac),
                s.rssi_dbm,
                s.sensor_id
            ));
        }
        out
    }

    pub fn tickets_csv(&self) -> String {
        let mut out = String::from("instant,route_id,stop_id,trip_id\n");
        for t in &self.tickets {
            out.push_str(&format!(
                "{},{},{},{}\n",
                t.instant.to_iso8601(),
                t.route_id,
                t.stop_id,
                t.trip_id.as_deref().unwrap_or("")
            ));
        }
        out
    }

    /// Anonymizes the raw sightings in-memory (the same transformation the
    /// CSV ingest path applies).
    pub fn hashed_sightings(&self, salt: &[u8]) -> Vec<Sighting> {
        self.sightings
            .iter()
            .map(|s| {
                let (device_id, is_local_admin) =
                    anonymize_mac(&s.mac, salt).expect("non-empty salt");
                Sighting {
                    instant: s.instant,
                    device_id,
                    is_local_admin,
                    rssi_dbm: s.rssi_dbm,
                    sensor_id: s.sensor_id.clone(),
                }
            })
            .collect()
    }

    /// Serializes one sensor's sightings as a radiotap pcap of synthetic
    /// probe-request frames.
    pub fn sightings_pcap(&self, sensor_id: &str) -> Vec<u8> {
        use crate::capture::pcap::PcapWriter;
        let mut writer = PcapWriter::new(true);
        let mut seq = 0u16;
        for s in self.sightings.iter().filter(|s| s.sensor_id == sensor_id) {
            let frame = crate::capture::probe_request_frame(&s.mac, seq);
            writer.push_frame(s.instant.millis() * 1000, s.rssi_dbm, &frame);
            seq = seq.wrapping_add(1);
        }
        writer.into_bytes()
    }

    /// Writes all scenario files into `dir`.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let write = |name: &str, contents: &str| -> std::io::Result<()> {
            let mut f = std::fs::File::create(dir.join(name))?;
            f.write_all(contents.as_bytes())
        };
        write("stops.csv", &self.stops_csv())?;
        write("trips.csv", &self.trips_csv())?;
        write("stop_times.csv", &self.stop_times_csv())?;
        write("assignments.csv", &self.assignments_csv())?;
        write("sightings.csv", &self.sightings_csv())?;
        write("tickets.csv", &self.tickets_csv())?;
        let truth = serde_json::to_string_pretty(&self.truth).expect("serializable truth");
        write("ground_truth.json", &truth)?;
        Ok(())
    }
}
