#![no_main]

use libfuzzer_sys::fuzz_target;
use probecount::capture::radiotap;

fuzz_target!(|data: &[u8]| {
    let _ = radiotap::parse(data);
});
