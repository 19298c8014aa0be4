//! End-to-end CLI tests: exit codes, file outputs, and the pcap parse path.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use probecount::capture::pcap::PcapWriter;
use probecount::capture::{ingest_sightings_csv, probe_request_frame};
use probecount::report::observation_from_json;
use probecount::sim::{generate_scenario, ScenarioConfig};

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!(
            "probe-cli-{tag}-{}-{:x}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        TempDir(dir)
    }

    fn path(&self) -> &Path {
        &self.0
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn probe() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_probe"));
    cmd.env_remove("PROBE_SALT");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("probe binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stderr_text(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Writes a ready-made scenario directory for dataset-driven commands.
fn scenario_dir(tag: &str, config: &ScenarioConfig) -> TempDir {
    let dir = TempDir::new(tag);
    generate_scenario(config).unwrap().write_dir(dir.path()).unwrap();
    dir
}

fn small_config() -> ScenarioConfig {
    ScenarioConfig {
        seed: 5150,
        n_routes: 1,
        n_trips_per_route: 4,
        n_stops_per_trip: 5,
        ..ScenarioConfig::default()
    }
}

#[test]
fn parse_decodes_pcap_into_hashed_sightings() {
    let dir = TempDir::new("parse");
    let pcap_path = dir.path().join("bus07.pcap");
    let out_path = dir.path().join("sightings.csv");

    let mut writer = PcapWriter::new(true);
    writer.push_frame(
        1_709_539_200_000_000,
        -58,
        &probe_request_frame(&[0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff], 1),
    );
    writer.push_frame(
        1_709_539_201_500_000,
        -72,
        &probe_request_frame(&[0xda, 0xa1, 0x19, 0x00, 0x00, 0x01], 2),
    );
    std::fs::write(&pcap_path, writer.into_bytes()).unwrap();

    let output = run(probe()
        .args(["parse", "--pcap"])
        .arg(&pcap_path)
        .arg("--out")
        .arg(&out_path)
        .env("PROBE_SALT", "cli-test-salt"));
    assert_eq!(code(&output), 0, "{}", stderr_text(&output));

    let ingested = ingest_sightings_csv(std::fs::File::open(&out_path).unwrap(), None).unwrap();
    assert_eq!(ingested.sightings.len(), 2);
    // Sensor id defaults to the pcap file stem.
    assert!(ingested.sightings.iter().all(|s| s.sensor_id == "bus07"));
    assert_eq!(ingested.sightings[0].rssi_dbm, -58);
    // The locally administered MAC keeps its U/L bit through the hash.
    assert!(ingested.sightings.iter().any(|s| s.is_local_admin));
    // No raw MAC bytes in the output.
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(!text.contains("aa:bb:cc"));
}

#[test]
fn parse_salvages_frames_before_a_truncated_record() {
    let dir = TempDir::new("parse-trunc");
    let pcap_path = dir.path().join("cut.pcap");
    let out_path = dir.path().join("sightings.csv");

    let mut writer = PcapWriter::new(true);
    writer.push_frame(1_709_539_200_000_000, -60, &probe_request_frame(&[1, 2, 3, 4, 5, 6], 1));
    writer.push_frame(1_709_539_201_000_000, -61, &probe_request_frame(&[1, 2, 3, 4, 5, 7], 2));
    let mut bytes = writer.into_bytes();
    bytes.truncate(bytes.len() - 9); // cut into the second record
    std::fs::write(&pcap_path, bytes).unwrap();

    let output = run(probe()
        .args(["parse", "--pcap"])
        .arg(&pcap_path)
        .arg("--out")
        .arg(&out_path)
        .env("PROBE_SALT", "cli-test-salt"));
    assert_eq!(code(&output), 0, "{}", stderr_text(&output));
    assert!(stderr_text(&output).contains("keeping prior frames"));
    let ingested = ingest_sightings_csv(std::fs::File::open(&out_path).unwrap(), None).unwrap();
    assert_eq!(ingested.sightings.len(), 1);
}

#[test]
fn parse_without_salt_is_a_usage_error() {
    let dir = TempDir::new("parse-nosalt");
    let pcap_path = dir.path().join("cap.pcap");
    std::fs::write(&pcap_path, PcapWriter::new(true).into_bytes()).unwrap();
    let output = run(probe()
        .args(["parse", "--pcap"])
        .arg(&pcap_path)
        .arg("--out")
        .arg(dir.path().join("out.csv")));
    assert_eq!(code(&output), 64);
    assert!(stderr_text(&output).contains("PROBE_SALT"));
}

#[test]
fn estimate_from_pcap_input_end_to_end() {
    let scenario = scenario_dir("est-pcap", &small_config());
    let generated = generate_scenario(&small_config()).unwrap();
    let pcap_path = scenario.path().join("bus01.pcap");
    std::fs::write(&pcap_path, generated.sightings_pcap("bus01")).unwrap();
    let out = TempDir::new("est-pcap-out");

    let output = run(probe()
        .args(["estimate", "--pcap"])
        .arg(&pcap_path)
        .arg("--schedule-dir")
        .arg(scenario.path())
        .arg("--assignments")
        .arg(scenario.path().join("assignments.csv"))
        .arg("--tickets")
        .arg(scenario.path().join("tickets.csv"))
        .arg("--out-dir")
        .arg(out.path())
        .args(["--from", "2024-03-01", "--to", "2024-03-11"])
        .env("PROBE_SALT", "cli-test-salt"));
    assert_eq!(code(&output), 0, "{}", stderr_text(&output));

    let obs_text =
        std::fs::read_to_string(out.path().join("observations").join("R01T001.json")).unwrap();
    let obs = observation_from_json(&obs_text).unwrap();
    assert_eq!(obs.stops.len(), 5);
    let entries: u32 = obs.i.iter().sum();
    let exits: u32 = obs.o.iter().sum();
    assert_eq!(entries, exits);
}

#[test]
fn estimate_missing_schedule_dir_is_io_error_naming_path() {
    let out = TempDir::new("est-miss");
    let missing = out.path().join("no-such-schedule");
    let output = run(probe()
        .args(["estimate", "--sightings"])
        .arg(out.path().join("s.csv"))
        .arg("--schedule-dir")
        .arg(&missing)
        .arg("--assignments")
        .arg(out.path().join("a.csv"))
        .arg("--out-dir")
        .arg(out.path().join("out"))
        .args(["--from", "2024-03-01", "--to", "2024-03-11"]));
    assert_eq!(code(&output), 1);
    assert!(stderr_text(&output).contains("no-such-schedule"));
}

#[test]
fn estimate_empty_sightings_writes_zero_vectors_and_exits_zero() {
    let scenario = scenario_dir("est-empty", &small_config());
    let empty = scenario.path().join("empty.csv");
    std::fs::write(&empty, "instant,mac,rssi,sensor_id\n").unwrap();
    let out = TempDir::new("est-empty-out");

    let output = run(probe()
        .args(["estimate", "--sightings"])
        .arg(&empty)
        .arg("--schedule-dir")
        .arg(scenario.path())
        .arg("--assignments")
        .arg(scenario.path().join("assignments.csv"))
        .arg("--out-dir")
        .arg(out.path())
        .args(["--from", "2024-03-01", "--to", "2024-03-11"]));
    assert_eq!(code(&output), 0, "{}", stderr_text(&output));

    let obs_text =
        std::fs::read_to_string(out.path().join("observations").join("R01T002.json")).unwrap();
    let obs = observation_from_json(&obs_text).unwrap();
    assert!(obs.i.iter().all(|&v| v == 0));
    assert!(obs.c.iter().all(|&v| v == 0));
}

#[test]
fn estimate_with_no_resolvable_trips_exits_two() {
    let scenario = scenario_dir("est-notrips", &small_config());
    // Gut the schedule: header-only stop_times leaves zero timelines.
    std::fs::write(
        scenario.path().join("stop_times.csv"),
        "trip_id,seq,stop_id,arrival\n",
    )
    .unwrap();
    let output = run(probe()
        .args(["estimate", "--sightings"])
        .arg(scenario.path().join("sightings.csv"))
        .arg("--schedule-dir")
        .arg(scenario.path())
        .arg("--assignments")
        .arg(scenario.path().join("assignments.csv"))
        .arg("--out-dir")
        .arg(scenario.path().join("out"))
        .args(["--from", "2024-03-01", "--to", "2024-03-11"])
        .env("PROBE_SALT", "cli-test-salt"));
    assert_eq!(code(&output), 2);
    assert!(stderr_text(&output).contains("no trips"));
}

#[test]
fn estimate_rejects_reversed_date_range() {
    let scenario = scenario_dir("est-range", &small_config());
    let output = run(probe()
        .args(["estimate", "--sightings"])
        .arg(scenario.path().join("sightings.csv"))
        .arg("--schedule-dir")
        .arg(scenario.path())
        .arg("--assignments")
        .arg(scenario.path().join("assignments.csv"))
        .arg("--out-dir")
        .arg(scenario.path().join("out"))
        .args(["--from", "2024-03-11", "--to", "2024-03-01"])
        .env("PROBE_SALT", "cli-test-salt"));
    assert_eq!(code(&output), 64);
}

#[test]
fn calibrate_empty_grid_is_usage_error() {
    let scenario = scenario_dir("cal-grid", &small_config());
    let output = run(probe()
        .args(["calibrate", "--sightings"])
        .arg(scenario.path().join("sightings.csv"))
        .arg("--schedule-dir")
        .arg(scenario.path())
        .arg("--assignments")
        .arg(scenario.path().join("assignments.csv"))
        .arg("--out-dir")
        .arg(scenario.path().join("cal"))
        .args(["--rssi-grid", ""])
        .env("PROBE_SALT", "cli-test-salt"));
    assert_eq!(code(&output), 64);
    assert!(stderr_text(&output).contains("rssi-grid"));
}

#[test]
fn calibrate_unreachable_min_trips_leaves_empty_tables_exit_zero() {
    let scenario = scenario_dir("cal-min", &small_config());
    let out = TempDir::new("cal-min-out");
    let output = run(probe()
        .args(["--no-timestamps", "calibrate", "--sightings"])
        .arg(scenario.path().join("sightings.csv"))
        .arg("--schedule-dir")
        .arg(scenario.path())
        .arg("--assignments")
        .arg(scenario.path().join("assignments.csv"))
        .arg("--tickets")
        .arg(scenario.path().join("tickets.csv"))
        .arg("--out-dir")
        .arg(out.path())
        .args(["--min-trips", "9999"])
        .env("PROBE_SALT", "cli-test-salt"));
    assert_eq!(code(&output), 0, "{}", stderr_text(&output));
    assert!(stderr_text(&output).contains("min_trips"));

    let summary = std::fs::read_to_string(out.path().join("summary_means.csv")).unwrap();
    assert_eq!(summary, "route,case,mae,rmse,r2\n");
    // The records themselves are still written in full.
    let records = std::fs::read_to_string(out.path().join("records.csv")).unwrap();
    assert!(records.lines().count() > 1);
}

#[test]
fn simulate_rejects_bad_config_with_field_message() {
    let dir = TempDir::new("sim-bad");
    let config_path = dir.path().join("bad.conf");
    std::fs::write(&config_path, "p_device = 1.5\n").unwrap();
    let output = run(probe()
        .arg("--config")
        .arg(&config_path)
        .args(["simulate", "--out-dir"])
        .arg(dir.path().join("out")));
    assert_eq!(code(&output), 64);
    assert!(stderr_text(&output).contains("p_device"));
}

#[test]
fn simulate_poisson_boardings_land_near_expectation() {
    // 50 trips at lambda = 10: the boarding total is Poisson(500), so
    // 3 sigma is about 67.
    let dir = TempDir::new("sim-poisson");
    let config_path = dir.path().join("scenario.conf");
    std::fs::write(
        &config_path,
        "n_routes = 1\nn_trips_per_route = 50\npassengers_per_trip = poisson:10\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let output = run(probe()
        .arg("--config")
        .arg(&config_path)
        .args(["simulate", "--seed", "77", "--out-dir"])
        .arg(&out_dir));
    assert_eq!(code(&output), 0, "{}", stderr_text(&output));

    let tickets = std::fs::read_to_string(out_dir.join("tickets.csv")).unwrap();
    let boardings = tickets.lines().count() as i64 - 1;
    assert!(
        (boardings - 500).abs() <= 67,
        "total boardings {boardings} outside 500 +/- 67"
    );
}

#[test]
fn simulate_zero_passengers_is_valid() {
    let dir = TempDir::new("sim-zero");
    let config_path = dir.path().join("scenario.conf");
    std::fs::write(&config_path, "passengers_per_trip = constant:0\nn_noise_devices = 0\n")
        .unwrap();
    let out_dir = dir.path().join("out");
    let output = run(probe()
        .arg("--config")
        .arg(&config_path)
        .args(["simulate", "--out-dir"])
        .arg(&out_dir));
    assert_eq!(code(&output), 0);
    let sightings = std::fs::read_to_string(out_dir.join("sightings.csv")).unwrap();
    assert_eq!(sightings, "instant,mac,rssi,sensor_id\n");
}

#[test]
fn report_on_missing_and_empty_dirs() {
    let dir = TempDir::new("report");
    let output = run(probe()
        .args(["report", "--observations"])
        .arg(dir.path().join("nope"))
        .arg("--out-dir")
        .arg(dir.path().join("out")));
    assert_eq!(code(&output), 1);

    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let output = run(probe()
        .args(["report", "--observations"])
        .arg(&empty)
        .arg("--out-dir")
        .arg(dir.path().join("out")));
    assert_eq!(code(&output), 2);
}

#[test]
fn unknown_flags_are_usage_errors() {
    let output = run(probe().args(["estimate", "--bogus-flag"]));
    assert_eq!(code(&output), 64);
}

#[test]
fn config_file_sets_pipeline_defaults_and_flags_override() {
    // min_rssi -128 via config keeps a weak sighting that the built-in
    // default (-55) would drop; an explicit flag overrides the config.
    let scenario_cfg = ScenarioConfig {
        seed: 88,
        n_routes: 1,
        n_trips_per_route: 2,
        n_stops_per_trip: 5,
        onboard_rssi: (-90, -88),
        n_noise_devices: 0,
        p_random_mac: 0.0,
        p_device: 1.0,
        ..ScenarioConfig::default()
    };
    let scenario = scenario_dir("cfg", &scenario_cfg);
    let config_path = scenario.path().join("pipeline.conf");
    std::fs::write(&config_path, "min_rssi = -128\ninclude_random = true\n").unwrap();

    let run_estimate = |extra: &[&str], out: &Path| {
        let mut cmd = probe();
        cmd.arg("--config")
            .arg(&config_path)
            .args(["estimate", "--sightings"])
            .arg(scenario.path().join("sightings.csv"))
            .arg("--schedule-dir")
            .arg(scenario.path())
            .arg("--assignments")
            .arg(scenario.path().join("assignments.csv"))
            .arg("--out-dir")
            .arg(out)
            .args(["--from", "2024-03-01", "--to", "2024-03-11"])
            .args(extra)
            .env("PROBE_SALT", "cli-test-salt");
        run(&mut cmd)
    };

    let out_weak = TempDir::new("cfg-weak");
    assert_eq!(code(&run_estimate(&[], out_weak.path())), 0);
    let obs = observation_from_json(
        &std::fs::read_to_string(out_weak.path().join("observations/R01T001.json")).unwrap(),
    )
    .unwrap();
    let mapped_weak: u32 = obs.i.iter().sum();
    assert!(mapped_weak > 0, "config-file -128 threshold must keep weak probes");

    let out_strong = TempDir::new("cfg-strong");
    assert_eq!(code(&run_estimate(&["--min-rssi", "-55"], out_strong.path())), 0);
    let obs = observation_from_json(
        &std::fs::read_to_string(out_strong.path().join("observations/R01T001.json")).unwrap(),
    )
    .unwrap();
    let mapped_strong: u32 = obs.i.iter().sum();
    assert_eq!(mapped_strong, 0, "explicit --min-rssi must override the config file");
}
