//! Regenerates the checked-in fuzz corpus seeds:
//!
//! ```text
//! cargo run -p probecount --example make_fuzz_seeds
//! ```
//!
//! Each seed is a small, valid (or deliberately near-valid) input for one
//! fuzz target, so the fuzzer starts from the interesting part of the
//! format instead of rediscovering magic numbers.

use std::fs;
use std::path::PathBuf;

use probecount::capture::pcap::PcapWriter;
use probecount::capture::{probe_request_frame, radiotap};

fn corpus_dir(target: &str) -> PathBuf {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    root.join("../../fuzz/corpus").join(target)
}

fn write(target: &str, name: &str, bytes: &[u8]) {
    let dir = corpus_dir(target);
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join(name), bytes).unwrap();
    println!("wrote fuzz/corpus/{target}/{name} ({} bytes)", bytes.len());
}

fn main() {
    let mac = [0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff];

    // pcap_stream: one-record radiotap capture, a bare-802.11 capture,
    // and a header-only file.
    let mut writer = PcapWriter::new(true);
    writer.push_frame(1_709_539_200_000_000, -63, &probe_request_frame(&mac, 1));
    write("pcap_stream", "radiotap-one-probe.pcap", &writer.into_bytes());

    let mut writer = PcapWriter::new(false);
    writer.push_frame(1_709_539_200_500_000, -70, &probe_request_frame(&mac, 2));
    write("pcap_stream", "bare-80211.pcap", &writer.into_bytes());

    write(
        "pcap_stream",
        "header-only.pcap",
        &PcapWriter::new(true).into_bytes(),
    );

    // radiotap: signal-only header, and one with TSFT + flags preceding
    // the signal field.
    write(
        "radiotap",
        "signal-only.bin",
        &radiotap::write_signal_only(-62),
    );
    let mut extended = vec![0u8, 0];
    extended.extend_from_slice(&18u16.to_le_bytes());
    extended.extend_from_slice(&(1u32 | (1 << 1) | (1 << 5)).to_le_bytes());
    extended.extend_from_slice(&[0; 8]); // TSFT
    extended.push(0x02); // flags
    extended.push((-71i8) as u8);
    write("radiotap", "tsft-flags-signal.bin", &extended);

    // probe_frame: a well-formed probe request and a beacon.
    write("probe_frame", "probe-request.bin", &probe_request_frame(&mac, 7));
    let mut beacon = probe_request_frame(&mac, 8);
    beacon[0] = 8 << 4;
    write("probe_frame", "beacon.bin", &beacon);

    // sightings_csv: raw-MAC and pre-hashed rows.
    write(
        "sightings_csv",
        "raw-macs.csv",
        b"instant,mac,rssi,sensor_id\n\
          2024-03-04T08:00:02.985Z,aa:bb:cc:dd:ee:ff,-68,bus01\n\
          1709539203125,da:a1:19:00:00:01,-55,bus01\n",
    );
    write(
        "sightings_csv",
        "hashed-ids.csv",
        b"instant,mac,rssi,sensor_id,is_local_admin\n\
          2024-03-04T08:00:02.985Z,00112233445566778899aabbccddeeff,-68,bus01,true\n",
    );

    // schedule_csv: the three files joined by the 0x1e record separator.
    let mut schedule = Vec::new();
    schedule.extend_from_slice(b"stop_id,name,lat,lon\nS1,Alpha,32.64,-16.91\nS2,Bravo,32.65,-16.90\n");
    schedule.push(0x1e);
    schedule.extend_from_slice(b"trip_id,route_id,direction\nT1,R1,outbound\n");
    schedule.push(0x1e);
    schedule.extend_from_slice(
        b"trip_id,seq,stop_id,arrival\nT1,0,S1,2024-03-04T08:00:00Z\nT1,1,S2,2024-03-04T08:02:00Z\n",
    );
    write("schedule_csv", "two-stop-trip.bin", &schedule);

    write(
        "assignments_csv",
        "one-span.csv",
        b"sensor_id,trip_id,start,end\nbus01,T1,2024-03-04T07:59:00Z,2024-03-04T08:03:00Z\n",
    );

    write(
        "tickets_csv",
        "two-tickets.csv",
        b"instant,route_id,stop_id,trip_id\n\
          2024-03-04T08:00:00Z,R1,S1,T1\n\
          2024-03-04T08:01:30Z,R1,,\n",
    );

    write(
        "config_kv",
        "scenario.conf",
        b"# synthetic scenario\nseed = 42\nn_routes = 2\npassengers_per_trip = poisson:6\nonboard_rssi = -70,-40\n",
    );
}
