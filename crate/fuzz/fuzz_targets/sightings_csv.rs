#![no_main]

use libfuzzer_sys::fuzz_target;
use probecount::capture::ingest_sightings_csv;

fuzz_target!(|data: &[u8]| {
    // Half the corpus exercises the raw-MAC hashing path, half the
    // salt-less pre-hashed path.
    let salt: Option<&[u8]> = if data.len() % 2 == 0 {
        Some(b"fuzz-salt")
    } else {
        None
    };
    let _ = ingest_sightings_csv(data, salt);
});
