//! Shared input loading: datasets (schedule + assignments + tickets +
//! sightings), config-file defaults, salt handling.

use std::path::Path;

use probecount::capture::{
    decode_probe_request, ingest_sightings_csv, pcap::parse_pcap_stream, ProbeDecode, Sighting,
};
use probecount::config::{parse_kv, KvEntry};
use probecount::estimator::WindowIndexing;
use probecount::pipeline::PipelineOptions;
use probecount::transit::{
    load_assignments_csv, load_schedule_dir, load_tickets_csv, AssignmentIndex, Schedule,
    TicketValidation, TransitError,
};
use probecount::Instant;

use crate::{CliError, DatasetArgs, FilterArgs};

pub struct Dataset {
    pub schedule: Schedule,
    pub assignments: AssignmentIndex,
    pub tickets: Option<Vec<TicketValidation>>,
    pub sightings: Vec<Sighting>,
}

fn transit_err(e: TransitError) -> CliError {
    match e {
        TransitError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::Io(other.to_string()),
    }
}

pub fn read_salt(salt_env: &str) -> Result<Option<Vec<u8>>, CliError> {
    match std::env::var(salt_env) {
        Ok(v) if !v.is_empty() => Ok(Some(v.into_bytes())),
        _ => Ok(None),
    }
}

pub fn require_salt(salt_env: &str) -> Result<Vec<u8>, CliError> {
    read_salt(salt_env)?.ok_or_else(|| {
        CliError::Usage(format!(
            "environment variable {salt_env} is unset or empty; refusing to hash MACs unsalted"
        ))
    })
}

/// Decodes a pcap into sightings, hashing the source MACs.
pub fn sightings_from_pcap(
    path: &Path,
    salt: &[u8],
    sensor_id: &str,
) -> Result<Vec<Sighting>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let stream = parse_pcap_stream(reader)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut sightings = Vec::new();
    let mut truncated_probes = 0u64;
    for frame in stream {
        let frame = match frame {
            Ok(frame) => frame,
            // Captures cut off mid-record are routine (vehicle power
            // loss); keep everything decoded so far.
            Err(e) => {
                eprintln!("warning: {}: {e}; keeping prior frames", path.display());
                break;
            }
        };
        match decode_probe_request(&frame) {
            ProbeDecode::Probe(record) => {
                let sighting = Sighting::from_probe(&record, salt, sensor_id)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                sightings.push(sighting);
            }
            ProbeDecode::NotProbe => {}
            ProbeDecode::Truncated => truncated_probes += 1,
        }
    }
    if truncated_probes > 0 {
        eprintln!("warning: {truncated_probes} truncated probe-request frames skipped");
    }
    sightings.sort_by(|a, b| (&a.sensor_id, a.instant).cmp(&(&b.sensor_id, b.instant)));
    Ok(sightings)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sensor".to_string())
}

pub fn load_dataset(args: &DatasetArgs) -> Result<Dataset, CliError> {
    if !args.schedule_dir.is_dir() {
        return Err(CliError::Io(format!(
            "schedule directory {} does not exist",
            args.schedule_dir.display()
        )));
    }
    let schedule = load_schedule_dir(&args.schedule_dir).map_err(transit_err)?;

    let assignments_file = std::fs::File::open(&args.assignments).map_err(|e| {
        CliError::Io(format!("cannot open {}: {e}", args.assignments.display()))
    })?;
    let assignments = load_assignments_csv(assignments_file).map_err(transit_err)?;

    let tickets = match &args.tickets {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
            Some(load_tickets_csv(file, Some(&schedule)).map_err(transit_err)?)
        }
        None => None,
    };

    let sightings = match (&args.sightings, &args.pcap) {
        (Some(path), None) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
            let salt = read_salt(&args.salt_env)?;
            let ingest = ingest_sightings_csv(file, salt.as_deref()).map_err(|e| match e {
                probecount::capture::IngestError::UnsaltedRawMac { .. } => {
                    CliError::Usage(e.to_string())
                }
                other => CliError::Io(other.to_string()),
            })?;
            for reject in &ingest.rejects {
                eprintln!(
                    "warning: {}:{}: {}",
                    path.display(),
                    reject.line,
                    reject.reason
                );
            }
            ingest.sightings
        }
        (None, Some(path)) => {
            let salt = require_salt(&args.salt_env)?;
            let sensor = args.sensor_id.clone().unwrap_or_else(|| file_stem(path));
            sightings_from_pcap(path, &salt, &sensor)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --sightings or --pcap is required".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    Ok(Dataset {
        schedule,
        assignments,
        tickets,
        sightings,
    })
}

/// Pipeline defaults that a `--config` file may override; CLI flags win.
#[derive(Debug, Default, Clone)]
pub struct ConfigDefaults {
    pub min_rssi: Option<i8>,
    pub include_random: Option<bool>,
    pub boundary_margin_seconds: Option<i64>,
    pub ticket_grace_seconds: Option<i64>,
    pub w_indexing: Option<WindowIndexing>,
    pub min_trips: Option<usize>,
    pub salt_env: Option<String>,
}

pub fn load_config_defaults(path: Option<&Path>) -> Result<ConfigDefaults, CliError> {
    let Some(path) = path else {
        return Ok(ConfigDefaults::default());
    };
    let entries = read_kv_file(path)?;
    let mut defaults = ConfigDefaults::default();
    for KvEntry { key, value, line } in &entries {
        let bad = |what: &str| {
            CliError::Usage(format!(
                "{}:{line}: {key}: {what} (got {value:?})",
                path.display()
            ))
        };
        match key.as_str() {
            "min_rssi" => defaults.min_rssi = Some(value.parse().map_err(|_| bad("expected dBm"))?),
            "include_random" => {
                defaults.include_random =
                    Some(value.parse().map_err(|_| bad("expected true or false"))?)
            }
            "boundary_margin_seconds" => {
                defaults.boundary_margin_seconds =
                    Some(value.parse().map_err(|_| bad("expected seconds"))?)
            }
            "ticket_grace_seconds" => {
                defaults.ticket_grace_seconds =
                    Some(value.parse().map_err(|_| bad("expected seconds"))?)
            }
            "w_indexing" => {
                defaults.w_indexing = Some(
                    WindowIndexing::parse(value)
                        .ok_or_else(|| bad("expected departing or arriving"))?,
                )
            }
            "min_trips" => {
                defaults.min_trips = Some(value.parse().map_err(|_| bad("expected a count"))?)
            }
            "salt_env" => defaults.salt_env = Some(value.clone()),
            // Scenario keys are legitimate in a shared config file; the
            // pipeline commands ignore them.
            _ => {}
        }
    }
    Ok(defaults)
}

pub fn read_kv_file(path: &Path) -> Result<Vec<KvEntry>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse_kv(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Resolves filter flags and config-file defaults into pipeline options.
/// Explicit CLI flags win over the config file, which wins over built-ins.
pub fn pipeline_options(
    filter: &FilterArgs,
    defaults: &ConfigDefaults,
) -> Result<(PipelineOptions, probecount::FilterParams), CliError> {
    let w_indexing = match &filter.w_indexing {
        Some(text) => WindowIndexing::parse(text).ok_or_else(|| {
            CliError::Usage(format!(
                "--w-indexing must be departing or arriving, got {text:?}"
            ))
        })?,
        None => defaults.w_indexing.unwrap_or_default(),
    };
    let options = PipelineOptions {
        boundary_margin_ms: filter
            .boundary_margin_seconds
            .or(defaults.boundary_margin_seconds)
            .unwrap_or(60)
            * 1000,
        ticket_grace_ms: filter
            .ticket_grace_seconds
            .or(defaults.ticket_grace_seconds)
            .unwrap_or(120)
            * 1000,
        w_indexing,
    };
    let params = probecount::FilterParams::new(
        filter.min_rssi.or(defaults.min_rssi).unwrap_or(-55),
        filter.include_random || defaults.include_random.unwrap_or(false),
    );
    if !params.is_canonical() {
        eprintln!(
            "note: min RSSI {} is outside the canonical candidate set {:?}",
            params.min_rssi,
            probecount::RSSI_CANDIDATES
        );
    }
    Ok((options, params))
}

/// Parses `--from`/`--to` values: an instant, or a bare date meaning
/// midnight UTC.
pub fn parse_range_bound(text: &str, flag: &str) -> Result<Instant, CliError> {
    let candidate = if text.len() == 10 && text.as_bytes()[4] == b'-' {
        format!("{text}T00:00:00Z")
    } else {
        text.to_string()
    };
    Instant::parse(&candidate)
        .map_err(|_| CliError::Usage(format!("{flag}: unparsable instant {text:?}")))
}
