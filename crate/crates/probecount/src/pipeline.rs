//! End-to-end assembly: resolve sightings and tickets onto trips, then turn
//! a trip's data into the per-stop observation vectors under a given filter
//! configuration.

use std::collections::BTreeMap;

use crate::capture::Sighting;
use crate::estimator::{
    load_series, tally_entries_exits, window_counts, OdMatrix, TripObservation, WindowIndexing,
};
use crate::mapper::{
    build_spans, filter_sightings, map_to_stops, FilterParams, StopMapping,
    DEFAULT_BOUNDARY_MARGIN_MS,
};
use crate::transit::{
    ticket_counts, AssignmentIndex, Schedule, StopTimeline, TicketValidation,
    DEFAULT_TICKET_GRACE_MS,
};

#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    pub boundary_margin_ms: i64,
    pub ticket_grace_ms: i64,
    pub w_indexing: WindowIndexing,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            boundary_margin_ms: DEFAULT_BOUNDARY_MARGIN_MS,
            ticket_grace_ms: DEFAULT_TICKET_GRACE_MS,
            w_indexing: WindowIndexing::Departing,
        }
    }
}

/// One trip's resolved inputs: its timeline, the sightings that landed on
/// it (clipped to the margined stop window, sorted by instant), and the
/// ground-truth vector b when ticketing was loaded.
#[derive(Debug, Clone)]
pub struct TripData {
    pub timeline: StopTimeline,
    pub sightings: Vec<Sighting>,
    /// Ticket validations per stop; `None` when no ticketing was supplied.
    pub b: Option<Vec<u32>>,
    pub rejected_tickets: u32,
}

impl TripData {
    pub fn trip_id(&self) -> &str {
        &self.timeline.trip_id
    }

    pub fn route_id(&self) -> &str {
        &self.timeline.route_id
    }
}

#[derive(Debug, Default)]
pub struct AssemblyStats {
    /// Sightings whose (sensor, instant) matched no assignment span, or an
    /// assignment naming a trip absent from the schedule.
    pub unresolved_sightings: u64,
    /// Sightings resolved to a trip but outside its margined stop window.
    pub clipped_sightings: u64,
    /// Tickets that matched no trip.
    pub unassigned_tickets: u64,
}

/// Resolves sightings and tickets onto the schedule's trips.
///
/// Every schedule trip appears in the output (possibly with zero
/// sightings), in trip-id order.
pub fn assemble_trips(
    schedule: &Schedule,
    assignments: &AssignmentIndex,
    sightings: &[Sighting],
    tickets: Option<&[TicketValidation]>,
    options: &PipelineOptions,
) -> (Vec<TripData>, AssemblyStats) {
    let mut stats = AssemblyStats::default();
    let mut per_trip: BTreeMap<&str, Vec<Sighting>> = BTreeMap::new();

    for sighting in sightings {
        let Some(trip_id) = assignments.resolve_trip(&sighting.sensor_id, sighting.instant)
        else {
            stats.unresolved_sightings += 1;
            continue;
        };
        let Some(timeline) = schedule.timeline(trip_id) else {
            stats.unresolved_sightings += 1;
            continue;
        };
        let window_start = timeline.first_arrival().add_millis(-options.boundary_margin_ms);
        let window_end = timeline.last_arrival().add_millis(options.boundary_margin_ms);
        if sighting.instant < window_start || sighting.instant > window_end {
            stats.clipped_sightings += 1;
            continue;
        }
        per_trip
            .entry(&timeline.trip_id)
            .or_default()
            .push(sighting.clone());
    }

    // Tickets: direct trip_id match first, then route + time window.
    let mut tickets_per_trip: BTreeMap<String, Vec<TicketValidation>> = BTreeMap::new();
    if let Some(tickets) = tickets {
        for ticket in tickets {
            let trip_id = match &ticket.trip_id {
                Some(id) if schedule.timeline(id).is_some() => Some(id.clone()),
                Some(_) => None,
                None => resolve_ticket_trip(schedule, ticket, options.ticket_grace_ms),
            };
            match trip_id {
                Some(id) => tickets_per_trip.entry(id).or_default().push(ticket.clone()),
                None => stats.unassigned_tickets += 1,
            }
        }
    }

    let mut trips = Vec::with_capacity(schedule.n_trips());
    for timeline in schedule.timelines() {
        let mut trip_sightings = per_trip.remove(timeline.trip_id.as_str()).unwrap_or_default();
        trip_sightings.sort_by_key(|s| (s.instant, s.device_id));
        let (b, rejected_tickets) = match (&tickets, tickets_per_trip.remove(&timeline.trip_id)) {
            (None, _) => (None, 0),
            (Some(_), assigned) => {
                let assigned = assigned.unwrap_or_default();
                let counts = ticket_counts(timeline, &assigned, options.ticket_grace_ms);
                (Some(counts.b), counts.rejected)
            }
        };
        trips.push(TripData {
            timeline: timeline.clone(),
            sightings: trip_sightings,
            b,
            rejected_tickets,
        });
    }
    (trips, stats)
}

/// Route + time-window fallback for tickets without a trip id: the latest
/// trip of the route already underway at the validation instant (with the
/// terminus grace window).
fn resolve_ticket_trip(
    schedule: &Schedule,
    ticket: &TicketValidation,
    grace_ms: i64,
) -> Option<String> {
    let mut best: Option<&StopTimeline> = None;
    for trip_id in schedule.route_trips(&ticket.route_id) {
        let timeline = schedule.timeline(trip_id)?;
        let in_window = ticket.instant >= timeline.first_arrival()
            && ticket.instant <= timeline.last_arrival().add_millis(grace_ms);
        if in_window && best.is_none_or(|b| timeline.first_arrival() > b.first_arrival()) {
            best = Some(timeline);
        }
    }
    best.map(|t| t.trip_id.clone())
}

/// A trip observed under one filter configuration.
#[derive(Debug, Clone)]
pub struct ObservedTrip {
    pub observation: TripObservation,
    pub mappings: Vec<StopMapping>,
    /// Spans rejected for lying outside the margined trip window.
    pub rejected_spans: u32,
}

/// Runs filter -> spans -> stop mapping -> vectors for one trip.
pub fn observe_trip(
    trip: &TripData,
    params: FilterParams,
    options: &PipelineOptions,
) -> ObservedTrip {
    let filtered = filter_sightings(&trip.sightings, params);
    let spans = build_spans(&filtered);
    let mut mappings = Vec::with_capacity(spans.len());
    let mut rejected_spans = 0u32;
    for span in &spans {
        match map_to_stops(span, &trip.timeline, options.boundary_margin_ms) {
            Some(mapping) => mappings.push(mapping),
            None => rejected_spans += 1,
        }
    }
    let n = trip.timeline.n_stops();
    let (i, o) = tally_entries_exits(&mappings, n);
    // Entries precede exits by construction, so the running load cannot
    // go negative here.
    let c = load_series(&i, &o).expect("mapped entries/exits are conservative");
    let w = window_counts(&filtered, &trip.timeline, options.w_indexing);
    let b = trip.b.clone().unwrap_or_else(|| vec![0; n]);

    ObservedTrip {
        observation: TripObservation {
            trip_id: trip.timeline.trip_id.clone(),
            route_id: trip.timeline.route_id.clone(),
            stops: trip.timeline.stop_ids(),
            b,
            i,
            o,
            c,
            w,
        },
        mappings,
        rejected_spans,
    }
}

/// Trip-scoped OD matrix for an observed trip.
pub fn trip_od_matrix(trip: &TripData, observed: &ObservedTrip) -> OdMatrix {
    OdMatrix::from_mappings(
        trip.timeline.trip_id.clone(),
        trip.timeline.stop_ids(),
        &observed.mappings,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_scenario, oracle_counts, PassengerCount, ScenarioConfig};

    /// Ideal capture: every passenger carries a stable, chatty device and
    /// nothing else is on the air.
    fn ideal_config(seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            seed,
            n_routes: 2,
            n_trips_per_route: 6,
            n_stops_per_trip: 6,
            segment_seconds: 120.0,
            passengers_per_trip: PassengerCount::Poisson(5.0),
            probe_interval_seconds: 6.0, // segment / 20
            p_device: 1.0,
            p_random_mac: 0.0,
            n_noise_devices: 0,
            onboard_rssi: (-60, -40),
            noise_rssi: (-100, -90),
            max_load: 83,
            ticket_lag_seconds: 0.0,
        }
    }

    #[test]
    fn ideal_scenario_recovers_ground_truth_exactly() {
        let scenario = generate_scenario(&ideal_config(4242)).unwrap();
        let schedule = crate::transit::load_schedule(
            scenario.stops_csv().as_bytes(),
            scenario.trips_csv().as_bytes(),
            scenario.stop_times_csv().as_bytes(),
        )
        .unwrap();
        let assignments =
            crate::transit::load_assignments_csv(scenario.assignments_csv().as_bytes()).unwrap();
        let sightings = scenario.hashed_sightings(b"pipeline-test");
        let options = PipelineOptions::default();
        let (trips, stats) = assemble_trips(
            &schedule,
            &assignments,
            &sightings,
            Some(&scenario.tickets),
            &options,
        );
        assert_eq!(stats.unresolved_sightings, 0);
        assert_eq!(stats.unassigned_tickets, 0);
        assert_eq!(trips.len(), 12);

        let params = FilterParams::new(-128, true);
        for trip in &trips {
            let truth = scenario
                .truth
                .trips
                .iter()
                .find(|t| t.trip_id == trip.trip_id())
                .unwrap();
            let oracle = oracle_counts(truth);
            let observed = observe_trip(trip, params, &options);
            assert_eq!(observed.observation.i, oracle.i, "{}", trip.trip_id());
            assert_eq!(observed.observation.o, oracle.o, "{}", trip.trip_id());
            assert_eq!(observed.observation.c, oracle.c, "{}", trip.trip_id());
            assert_eq!(observed.observation.b, oracle.b, "{}", trip.trip_id());
            assert_eq!(observed.rejected_spans, 0);

            // One span per device that emitted at least one probe.
            let emitting = truth.devices.iter().filter(|d| d.probe_count >= 1).count();
            assert_eq!(observed.mappings.len(), emitting, "{}", trip.trip_id());
        }
    }

    #[test]
    fn empty_sightings_give_zero_vectors() {
        let scenario = generate_scenario(&ideal_config(7)).unwrap();
        let schedule = crate::transit::load_schedule(
            scenario.stops_csv().as_bytes(),
            scenario.trips_csv().as_bytes(),
            scenario.stop_times_csv().as_bytes(),
        )
        .unwrap();
        let assignments =
            crate::transit::load_assignments_csv(scenario.assignments_csv().as_bytes()).unwrap();
        let options = PipelineOptions::default();
        let (trips, _) = assemble_trips(&schedule, &assignments, &[], None, &options);
        let observed = observe_trip(&trips[0], FilterParams::new(-55, false), &options);
        assert!(observed.observation.i.iter().all(|&x| x == 0));
        assert!(observed.observation.c.iter().all(|&x| x == 0));
        assert!(observed.mappings.is_empty());
    }

    #[test]
    fn full_randomization_breaks_counting_in_both_directions() {
        // Every device re-randomizes per probe: excluding single-sighting
        // devices maps nobody, including them overcounts entries.
        let config = ScenarioConfig {
            p_random_mac: 1.0,
            passengers_per_trip: PassengerCount::Constant(6),
            ..ideal_config(1234)
        };
        let scenario = generate_scenario(&config).unwrap();
        let schedule = crate::transit::load_schedule(
            scenario.stops_csv().as_bytes(),
            scenario.trips_csv().as_bytes(),
            scenario.stop_times_csv().as_bytes(),
        )
        .unwrap();
        let assignments =
            crate::transit::load_assignments_csv(scenario.assignments_csv().as_bytes()).unwrap();
        let sightings = scenario.hashed_sightings(b"randomized");
        let options = PipelineOptions::default();
        let (trips, _) = assemble_trips(&schedule, &assignments, &sightings, None, &options);

        let mut total_true_boardings = 0u32;
        let mut excluded_mapped = 0usize;
        let mut included_entries = 0u32;
        for trip in &trips {
            let truth = scenario
                .truth
                .trips
                .iter()
                .find(|t| t.trip_id == trip.trip_id())
                .unwrap();
            total_true_boardings += truth.boardings.iter().sum::<u32>();
            let excluded = observe_trip(trip, FilterParams::new(-128, false), &options);
            excluded_mapped += excluded.mappings.len();
            let included = observe_trip(trip, FilterParams::new(-128, true), &options);
            included_entries += included.observation.i.iter().sum::<u32>();
        }
        assert_eq!(excluded_mapped, 0, "every device is a per-probe randomizer");
        assert!(
            included_entries > total_true_boardings,
            "fresh id per probe must overcount entries ({included_entries} vs {total_true_boardings})"
        );
    }

    #[test]
    fn tickets_resolve_by_route_and_time_without_trip_id() {
        let scenario = generate_scenario(&ideal_config(99)).unwrap();
        let schedule = crate::transit::load_schedule(
            scenario.stops_csv().as_bytes(),
            scenario.trips_csv().as_bytes(),
            scenario.stop_times_csv().as_bytes(),
        )
        .unwrap();
        let assignments =
            crate::transit::load_assignments_csv(scenario.assignments_csv().as_bytes()).unwrap();
        let mut blank_tickets = scenario.tickets.clone();
        for t in &mut blank_tickets {
            t.trip_id = None;
        }
        let options = PipelineOptions::default();
        let (with_ids, _) = assemble_trips(
            &schedule,
            &assignments,
            &[],
            Some(&scenario.tickets),
            &options,
        );
        let (without_ids, _) =
            assemble_trips(&schedule, &assignments, &[], Some(&blank_tickets), &options);
        for (a, b) in with_ids.iter().zip(&without_ids) {
            assert_eq!(a.b, b.b, "trip {}", a.trip_id());
        }
    }
}
