//! `probe report`: re-render plots and a per-route rollup from the
//! observation JSONs an earlier `estimate` run produced.

use std::collections::BTreeMap;

use probecount::report::trip_plot_svg;
use probecount::TripObservation;

use crate::outwrite::{sanitize, OutputWriter};
use crate::{CliError, CliResult, ReportArgs};

pub fn run(args: &ReportArgs, timestamps: bool) -> CliResult {
    let entries = std::fs::read_dir(&args.observations).map_err(|e| {
        CliError::Io(format!("cannot read {}: {e}", args.observations.display()))
    })?;
    let mut observations: Vec<TripObservation> = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::Io(format!("{}: {e}", args.observations.display())))?
            .path();
        if path.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let observation: TripObservation = serde_json_from(&text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        observations.push(observation);
    }
    if observations.is_empty() {
        return Err(CliError::Empty(format!(
            "no observation JSON files under {}",
            args.observations.display()
        )));
    }
    observations.sort_by(|a, b| a.trip_id.cmp(&b.trip_id));

    let selected: Option<Vec<&str>> = args
        .trips
        .as_ref()
        .map(|list| list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect());

    let writer = OutputWriter::new(&args.out_dir, timestamps)?;
    let mut plotted = 0usize;
    let mut rollup: BTreeMap<(String, usize), RouteAccumulator> = BTreeMap::new();
    for obs in &observations {
        let wanted = selected
            .as_ref()
            .map(|ids| ids.iter().any(|id| *id == obs.trip_id))
            .unwrap_or(true);
        if wanted {
            writer.write(
                &format!("plots/{}.svg", sanitize(&obs.trip_id)),
                &trip_plot_svg(obs),
            )?;
            plotted += 1;
        }
        let acc = rollup
            .entry((obs.route_id.clone(), obs.stops.len()))
            .or_default();
        acc.trips += 1;
        acc.entries += obs.i.iter().map(|&v| v as u64).sum::<u64>();
        acc.exits += obs.o.iter().map(|&v| v as u64).sum::<u64>();
        acc.tickets += obs.b.iter().map(|&v| v as u64).sum::<u64>();
        acc.peak_load = acc.peak_load.max(obs.c.iter().copied().max().unwrap_or(0));
    }

    let mut csv = String::from("route,n_stops,trips,tickets,wifi_entries,wifi_exits,peak_load\n");
    for ((route, n_stops), acc) in &rollup {
        csv.push_str(&format!(
            "{route},{n_stops},{},{},{},{},{}\n",
            acc.trips, acc.tickets, acc.entries, acc.exits, acc.peak_load
        ));
    }
    writer.write("routes.csv", &csv)?;

    println!(
        "reported {} routes, {} plots into {}",
        rollup.len(),
        plotted,
        args.out_dir.display()
    );
    Ok(())
}

#[derive(Default)]
struct RouteAccumulator {
    trips: u64,
    tickets: u64,
    entries: u64,
    exits: u64,
    peak_load: u32,
}

fn serde_json_from(text: &str) -> Result<TripObservation, String> {
    probecount::report::observation_from_json(text)
}
