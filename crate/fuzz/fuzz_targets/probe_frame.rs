#![no_main]

use libfuzzer_sys::fuzz_target;
use probecount::capture::{decode_probe_request, CapturedFrame};

fuzz_target!(|data: &[u8]| {
    let frame = CapturedFrame {
        capture_micros: 0,
        rssi_dbm: Some(-60),
        frame_bytes: data.to_vec(),
    };
    let _ = decode_probe_request(&frame);
});
