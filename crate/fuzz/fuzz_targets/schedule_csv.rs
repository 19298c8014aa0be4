#![no_main]

use libfuzzer_sys::fuzz_target;
use probecount::transit::load_schedule;

// The three schedule files, separated by ASCII record separators (0x1e).
fuzz_target!(|data: &[u8]| {
    let mut parts = data.splitn(3, |b| *b == 0x1e);
    let stops = parts.next().unwrap_or_default();
    let trips = parts.next().unwrap_or_default();
    let stop_times = parts.next().unwrap_or_default();
    let _ = load_schedule(stops, trips, stop_times);
});
