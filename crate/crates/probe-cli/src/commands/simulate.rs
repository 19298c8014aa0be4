//! `probe simulate`: write a synthetic ground-truthed scenario directory.

use std::path::Path;

use probecount::sim::{generate_scenario, ScenarioConfig};

use crate::inputs::read_kv_file;
use crate::{CliError, CliResult, SimulateArgs};

pub fn run(args: &SimulateArgs, config: Option<&Path>) -> CliResult {
    let mut scenario_config = match config {
        Some(path) => {
            let entries = read_kv_file(path)?;
            ScenarioConfig::from_kv(&entries).map_err(|e| CliError::Usage(e.to_string()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        scenario_config.seed = seed;
    }

    let scenario =
        generate_scenario(&scenario_config).map_err(|e| CliError::Usage(e.to_string()))?;
    scenario
        .write_dir(&args.out_dir)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out_dir.display())))?;

    let total_passengers: u32 = scenario
        .truth
        .trips
        .iter()
        .map(|t| t.boardings.iter().sum::<u32>())
        .sum();
    println!(
        "simulated {} trips on {} routes (seed {}): {} passengers, {} sightings into {}",
        scenario.trips.len(),
        scenario_config.n_routes,
        scenario_config.seed,
        total_passengers,
        scenario.sightings.len(),
        args.out_dir.display()
    );
    Ok(())
}
