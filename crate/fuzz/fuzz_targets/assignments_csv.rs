#![no_main]

use libfuzzer_sys::fuzz_target;
use probecount::transit::load_assignments_csv;

fuzz_target!(|data: &[u8]| {
    let _ = load_assignments_csv(data);
});
