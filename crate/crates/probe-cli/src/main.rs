//! `probe`: command-line surface for the passive Wi-Fi transit pipeline.
//!
//! Exit codes: 0 success, 1 input/output problems, 2 empty result,
//! 64 usage or configuration errors.

mod commands;
mod inputs;
mod outwrite;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const EXIT_IO: u8 = 1;
pub const EXIT_EMPTY: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

/// Errors carrying their process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Empty(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Empty(_) => EXIT_EMPTY,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Empty(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult = Result<(), CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "probe",
    about = "Passive Wi-Fi probe-request analytics for transit vehicles",
    version
)]
pub struct Cli {
    /// key = value file of defaults (scenario config for `simulate`,
    /// pipeline defaults for the other commands)
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,

    /// Omit generated-at headers so outputs are byte-reproducible
    #[arg(long, global = true)]
    pub no_timestamps: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decode a pcap capture into an anonymized sightings CSV
    Parse(ParseArgs),
    /// Estimate per-stop entries, exits, load, and OD matrices
    Estimate(EstimateArgs),
    /// Sweep filter parameters and emit the calibration tables
    Calibrate(CalibrateArgs),
    /// Generate a synthetic ground-truthed scenario
    Simulate(SimulateArgs),
    /// Re-render plots and a route rollup from estimate outputs
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct ParseArgs {
    /// Input pcap (classic format, link type 127 or 105)
    #[arg(long)]
    pub pcap: std::path::PathBuf,
    /// Environment variable holding the anonymization salt
    #[arg(long, default_value = "PROBE_SALT")]
    pub salt_env: String,
    /// Output sightings CSV
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Sensor (vehicle) id stamped on every sighting; defaults to the
    /// pcap file stem
    #[arg(long)]
    pub sensor_id: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct DatasetArgs {
    /// Pre-decoded sightings CSV (raw or hashed MACs)
    #[arg(long, conflicts_with = "pcap")]
    pub sightings: Option<std::path::PathBuf>,
    /// Raw pcap capture (hashed with the salt from --salt-env)
    #[arg(long)]
    pub pcap: Option<std::path::PathBuf>,
    /// Environment variable holding the anonymization salt
    #[arg(long, default_value = "PROBE_SALT")]
    pub salt_env: String,
    /// Sensor id for --pcap input; defaults to the pcap file stem
    #[arg(long)]
    pub sensor_id: Option<String>,
    /// Directory holding stops.csv, trips.csv, stop_times.csv
    #[arg(long)]
    pub schedule_dir: std::path::PathBuf,
    /// Vehicle-to-trip assignment CSV
    #[arg(long)]
    pub assignments: std::path::PathBuf,
    /// Ticket validation CSV (enables case A)
    #[arg(long)]
    pub tickets: Option<std::path::PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct FilterArgs {
    /// Minimum RSSI in dBm; -128 keeps everything [default: -55]
    #[arg(long, allow_hyphen_values = true)]
    pub min_rssi: Option<i8>,
    /// Keep devices seen only once per trip (presumed randomized MACs)
    #[arg(long)]
    pub include_random: bool,
    /// Clamp allowance around the first and last stop arrivals [default: 60]
    #[arg(long)]
    pub boundary_margin_seconds: Option<i64>,
    /// Grace window for ticket validations after the final arrival
    /// [default: 120]
    #[arg(long)]
    pub ticket_grace_seconds: Option<i64>,
    /// Which segment `w[t]` counts: departing stop t, or arriving at t
    /// [default: departing]
    #[arg(long)]
    pub w_indexing: Option<String>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Output directory (observations/, od/, plots/)
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
    /// Route OD aggregation window start (ISO-8601 instant or date)
    #[arg(long)]
    pub from: String,
    /// Route OD aggregation window end, exclusive (instant or date)
    #[arg(long)]
    pub to: String,
    /// Trip ids to plot as SVG (repeatable)
    #[arg(long = "plot")]
    pub plots: Vec<String>,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Output directory for records and table CSVs
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
    /// Comma-separated minimum-RSSI candidates
    #[arg(long, default_value = "-128,-85,-80,-75,-70,-65,-60,-55", allow_hyphen_values = true)]
    pub rssi_grid: String,
    /// Which include_random arms to sweep: both, include, exclude
    #[arg(long, default_value = "both")]
    pub arms: String,
    /// Minimum trips per route for rank tests and summaries [default: 30]
    #[arg(long)]
    pub min_trips: Option<usize>,
    /// RSSI at which the random-filter arms are compared; defaults to
    /// each route's modal best
    #[arg(long, allow_hyphen_values = true)]
    pub at_rssi: Option<i8>,
    /// Arm the modal-best-RSSI computation pools: exclude or include
    #[arg(long, default_value = "exclude")]
    pub modal_arm: String,
    /// Parameter cell summarized in the per-route tables
    #[arg(long, default_value_t = -55, allow_hyphen_values = true)]
    pub summary_rssi: i8,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Seed override for the scenario config
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for the scenario files
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory of TripObservation JSON files written by `estimate`
    #[arg(long)]
    pub observations: std::path::PathBuf,
    /// Output directory for plots and the rollup CSV
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
    /// Comma-separated trip ids to plot (default: all)
    #[arg(long)]
    pub trips: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            // Help and version are not errors.
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let timestamps = !cli.no_timestamps;
    let result = match &cli.command {
        Command::Parse(args) => commands::parse::run(args, timestamps),
        Command::Estimate(args) => commands::estimate::run(args, cli.config.as_deref(), timestamps),
        Command::Calibrate(args) => {
            commands::calibrate::run(args, cli.config.as_deref(), timestamps)
        }
        Command::Simulate(args) => commands::simulate::run(args, cli.config.as_deref()),
        Command::Report(args) => commands::report::run(args, timestamps),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
