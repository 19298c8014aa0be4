//! `probe parse`: pcap capture -> anonymized sightings CSV.

use probecount::capture::write_sightings_csv;

use crate::inputs::{file_stem, require_salt, sightings_from_pcap};
use crate::{CliError, CliResult, ParseArgs};

pub fn run(args: &ParseArgs, _timestamps: bool) -> CliResult {
    let salt = require_salt(&args.salt_env)?;
    let sensor = args
        .sensor_id
        .clone()
        .unwrap_or_else(|| file_stem(&args.pcap));
    let sightings = sightings_from_pcap(&args.pcap, &salt, &sensor)?;

    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
    }
    let out = std::fs::File::create(&args.out)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out.display())))?;
    write_sightings_csv(out, &sightings)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out.display())))?;

    println!(
        "parsed {} probe-request sightings from {} into {}",
        sightings.len(),
        args.pcap.display(),
        args.out.display()
    );
    Ok(())
}
