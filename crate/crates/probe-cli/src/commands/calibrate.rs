//! `probe calibrate`: the parameter study. Sweeps (min-RSSI x
//! include_random) over every trip, then emits the records CSV, the modal
//! best-RSSI table, the rank-test table, and the per-route summaries.

use std::collections::BTreeSet;
use std::path::Path;

use probecount::calibration::{
    compare_random_filter, modal_best_rssi, route_summary, sweep, CalibrationError, Case,
};
use probecount::mapper::FilterParams;
use probecount::pipeline::assemble_trips;
use probecount::report::{modal_csv, ranktest_csv, records_csv, summary_means_csv, summary_r2_csv};

use crate::inputs::{load_config_defaults, load_dataset, pipeline_options};
use crate::outwrite::OutputWriter;
use crate::{CalibrateArgs, CliError, CliResult};

fn parse_rssi_grid(text: &str) -> Result<Vec<i8>, CliError> {
    let mut grid = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let value: i8 = part
            .parse()
            .map_err(|_| CliError::Usage(format!("--rssi-grid: unparsable dBm {part:?}")))?;
        if !grid.contains(&value) {
            grid.push(value);
        }
    }
    if grid.is_empty() {
        return Err(CliError::Usage(
            "--rssi-grid is empty; at least one candidate RSSI is required".to_string(),
        ));
    }
    Ok(grid)
}

fn parse_arms(text: &str) -> Result<Vec<bool>, CliError> {
    match text {
        "both" => Ok(vec![true, false]),
        "include" => Ok(vec![true]),
        "exclude" => Ok(vec![false]),
        other => Err(CliError::Usage(format!(
            "--arms must be both, include, or exclude; got {other:?}"
        ))),
    }
}

pub fn run(args: &CalibrateArgs, config: Option<&Path>, timestamps: bool) -> CliResult {
    let defaults = load_config_defaults(config)?;
    let (options, _) = pipeline_options(&args.filter, &defaults)?;
    let grid = parse_rssi_grid(&args.rssi_grid)?;
    let arms = parse_arms(&args.arms)?;
    let min_trips = args.min_trips.or(defaults.min_trips).unwrap_or(30);
    let modal_arm_random = match args.modal_arm.as_str() {
        "exclude" => false,
        "include" => true,
        other => {
            return Err(CliError::Usage(format!(
                "--modal-arm must be exclude or include; got {other:?}"
            )))
        }
    };

    let dataset = load_dataset(&args.dataset)?;
    if dataset.tickets.is_none() {
        eprintln!("warning: no ticketing loaded; case A is skipped, tables cover case B only");
    }
    let (trips, _) = assemble_trips(
        &dataset.schedule,
        &dataset.assignments,
        &dataset.sightings,
        dataset.tickets.as_deref(),
        &options,
    );
    if trips.is_empty() {
        return Err(CliError::Empty("no trips resolved from the schedule".to_string()));
    }

    let outcome = sweep(&trips, &grid, &arms, &options).map_err(|e| match e {
        CalibrationError::EmptyGrid => CliError::Usage(e.to_string()),
        other => CliError::Io(other.to_string()),
    })?;

    let writer = OutputWriter::new(&args.out_dir, timestamps)?;
    writer.write("records.csv", &records_csv(&outcome.records))?;

    let route_ids: BTreeSet<&str> = outcome.records.iter().map(|r| r.route_id.as_str()).collect();

    // Table-1 shape: modal best RSSI per route, pooled over one arm.
    let mut modal_rows = Vec::new();
    let mut modal_by_route = std::collections::BTreeMap::new();
    if arms.contains(&modal_arm_random) {
        for route in &route_ids {
            let route_records: Vec<_> = outcome
                .records
                .iter()
                .filter(|r| {
                    r.route_id == *route && r.params.include_random == modal_arm_random
                })
                .cloned()
                .collect();
            match modal_best_rssi(&route_records, &grid) {
                Ok((rssi, share)) => {
                    modal_by_route.insert(route.to_string(), rssi);
                    modal_rows.push((route.to_string(), rssi, share));
                }
                Err(CalibrationError::NoScorableInstances) => {
                    eprintln!("warning: route {route}: no scorable modal-RSSI instances");
                }
                Err(e) => return Err(CliError::Io(e.to_string())),
            }
        }
    } else {
        eprintln!(
            "warning: the {} arm is not in --arms; modal table left empty",
            if modal_arm_random { "include" } else { "exclude" }
        );
    }
    writer.write("modal_rssi.csv", &modal_csv(&modal_rows))?;

    // Tables 2-3 shape: include vs exclude arms need both in the sweep.
    let mut comparisons = Vec::new();
    if arms.len() == 2 {
        for route in &route_ids {
            for case in Case::BOTH {
                let at_rssi = args
                    .at_rssi
                    .or_else(|| modal_by_route.get(*route).copied())
                    .unwrap_or(-55);
                match compare_random_filter(&outcome.records, route, case, at_rssi, min_trips) {
                    Ok(cmp) => comparisons.push(cmp),
                    Err(CalibrationError::NotEnoughPairs { .. }) => {}
                    Err(e) => return Err(CliError::Io(e.to_string())),
                }
            }
        }
    } else {
        eprintln!("warning: --arms {} sweeps one arm; rank-test table left empty", args.arms);
    }
    writer.write("ranktest.csv", &ranktest_csv(&comparisons))?;

    // Tables 4-5 shape: summaries at the fixed cell.
    let summary_cell = FilterParams::new(args.summary_rssi, false);
    let summaries = if arms.contains(&false) && grid.contains(&args.summary_rssi) {
        route_summary(&outcome.records, summary_cell, min_trips)
            .map_err(|e| CliError::Io(e.to_string()))?
    } else {
        eprintln!(
            "warning: cell (min_rssi {}, exclude-random) not in the sweep; summaries left empty",
            args.summary_rssi
        );
        Vec::new()
    };
    if summaries.is_empty() && !outcome.records.is_empty() {
        eprintln!("warning: no route reached min_trips = {min_trips}; summary tables are empty");
    }
    writer.write("summary_r2.csv", &summary_r2_csv(&summaries))?;
    writer.write("summary_means.csv", &summary_means_csv(&summaries))?;

    println!(
        "calibrated {} trips over {} grid cells: {} records, {} skips, {} summaries into {}",
        trips.len(),
        grid.len() * arms.len(),
        outcome.records.len(),
        outcome.skips.len(),
        summaries.len(),
        args.out_dir.display()
    );
    Ok(())
}
