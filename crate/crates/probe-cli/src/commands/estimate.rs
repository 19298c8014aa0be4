//! `probe estimate`: sightings -> per-trip observations, OD matrices, and
//! comparison plots.

use std::collections::BTreeMap;
use std::path::Path;

use probecount::estimator::od_matrix_union;
use probecount::pipeline::{assemble_trips, observe_trip, trip_od_matrix};
use probecount::report::{observation_json, od_csv, trip_plot_svg};

use crate::inputs::{load_config_defaults, load_dataset, parse_range_bound, pipeline_options};
use crate::outwrite::{sanitize, OutputWriter};
use crate::{CliError, CliResult, EstimateArgs};

pub fn run(args: &EstimateArgs, config: Option<&Path>, timestamps: bool) -> CliResult {
    let defaults = load_config_defaults(config)?;
    let (options, params) = pipeline_options(&args.filter, &defaults)?;
    let from = parse_range_bound(&args.from, "--from")?;
    let to = parse_range_bound(&args.to, "--to")?;
    if to < from {
        return Err(CliError::Usage(format!(
            "--from {} is after --to {}",
            args.from, args.to
        )));
    }

    let dataset = load_dataset(&args.dataset)?;
    let (trips, stats) = assemble_trips(
        &dataset.schedule,
        &dataset.assignments,
        &dataset.sightings,
        dataset.tickets.as_deref(),
        &options,
    );
    if trips.is_empty() {
        return Err(CliError::Empty(
            "no trips resolved: the schedule contains no usable timelines".to_string(),
        ));
    }

    let writer = OutputWriter::new(&args.out_dir, timestamps)?;
    let mut mapped_devices = 0u64;
    let mut peak_load = 0u32;
    // OD matrices grouped per (route, direction); mixing directions would
    // interleave reversed stop sequences.
    let mut route_matrices: BTreeMap<String, Vec<probecount::OdMatrix>> = BTreeMap::new();

    for trip in &trips {
        let observed = observe_trip(trip, params, &options);
        mapped_devices += observed.mappings.len() as u64;
        peak_load = peak_load.max(observed.observation.c.iter().copied().max().unwrap_or(0));
        writer.write(
            &format!("observations/{}.json", sanitize(trip.trip_id())),
            &observation_json(&observed.observation),
        )?;
        let od = trip_od_matrix(trip, &observed);
        writer.write(&format!("od/trip_{}.csv", sanitize(trip.trip_id())), &od_csv(&od))?;

        let in_range =
            trip.timeline.first_arrival() >= from && trip.timeline.first_arrival() < to;
        if in_range {
            let key = format!(
                "{}_{}",
                sanitize(trip.route_id()),
                trip.timeline.direction.as_str()
            );
            route_matrices.entry(key).or_default().push(od);
        }

        if args.plots.iter().any(|p| p == trip.trip_id()) {
            writer.write(
                &format!("plots/{}.svg", sanitize(trip.trip_id())),
                &trip_plot_svg(&observed.observation),
            )?;
        }
    }

    for (key, matrices) in &route_matrices {
        let scope = key.clone();
        let merged = od_matrix_union(scope, matrices);
        writer.write(&format!("od/route_{key}.csv"), &od_csv(&merged))?;
    }

    if stats.unresolved_sightings > 0 {
        eprintln!(
            "warning: {} sightings matched no assignment span",
            stats.unresolved_sightings
        );
    }
    // Annotation only: the fleet's nominal capacity, never enforced.
    const VEHICLE_CAPACITY: u32 = 83;
    if peak_load > VEHICLE_CAPACITY {
        eprintln!(
            "note: peak estimated load {peak_load} exceeds the {VEHICLE_CAPACITY}-passenger vehicle capacity"
        );
    }
    println!(
        "estimated {} trips ({} mapped devices, {} route OD matrices) into {}",
        trips.len(),
        mapped_devices,
        route_matrices.len(),
        args.out_dir.display()
    );
    Ok(())
}
